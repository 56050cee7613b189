#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "mirrorflow/egupm.hpp"
#include "mirrorflow/errors.hpp"

namespace mirrorflow {

void write_instance_csv(std::ostream& os, const RegressionInstance& inst) {
  for (Index j = 1; j <= inst.d(); ++j) os << "x_" << j << ',';
  os << "y\n";
  const auto old_precision = os.precision(17);
  for (Index i = 0; i < inst.n(); ++i) {
    for (Index j = 0; j < inst.d(); ++j) os << inst.x(i, j) << ',';
    os << inst.y[i] << '\n';
  }
  os.precision(old_precision);
}

RegressionInstance read_instance_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw InstanceError("instance CSV: empty input");
  const auto columns = static_cast<Index>(std::count(line.begin(), line.end(), ',')) + 1;
  if (columns < 2) throw InstanceError("instance CSV: need at least one feature column and y");
  std::vector<std::vector<double>> rows;
  long lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      try {
        std::size_t used = 0;
        row.push_back(std::stod(cell, &used));
        if (cell.find_first_not_of(" \r\t", used) != std::string::npos) throw std::invalid_argument(cell);
      } catch (const std::exception&) {
        throw InstanceError("instance CSV line " + std::to_string(lineno) + ": bad number '" + cell +
                            "'");
      }
    }
    if (static_cast<Index>(row.size()) != columns) {
      throw InstanceError("instance CSV line " + std::to_string(lineno) + ": expected " +
                          std::to_string(columns) + " fields");
    }
    rows.push_back(std::move(row));
  }
  const auto n = static_cast<Index>(rows.size());
  Matrix x(n, columns - 1);
  Vector y(n);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j + 1 < columns; ++j) x(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
    y[i] = rows[static_cast<std::size_t>(i)].back();
  }
  return RegressionInstance::from_data(std::move(x), std::move(y));
}

void write_instance_manifest(std::ostream& os, const RegressionInstance& inst,
                             const std::string& csv_name) {
  nlohmann::json j = {{"N", inst.n()},
                      {"d", inst.d()},
                      {"seed", inst.seed},
                      {"sparsity", inst.sparsity},
                      {"csv", csv_name}};
  os << j.dump(2) << '\n';
}

RegressionInstance load_instance(const std::string& path) {
  namespace fs = std::filesystem;
  std::ifstream in(path);
  if (!in) throw InstanceError("cannot open instance file '" + path + "'");
  if (fs::path(path).extension() != ".json") return read_instance_csv(in);

  nlohmann::json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw InstanceError("instance manifest '" + path + "': " + e.what());
  }
  if (!j.contains("csv") || !j["csv"].is_string()) {
    throw InstanceError("instance manifest '" + path + "' has no \"csv\" entry");
  }
  const fs::path csv = fs::path(path).parent_path() / j["csv"].get<std::string>();
  std::ifstream data(csv);
  if (!data) throw InstanceError("cannot open instance data '" + csv.string() + "'");
  RegressionInstance inst = read_instance_csv(data);
  inst.seed = j.value("seed", std::uint64_t{0});
  inst.sparsity = j.value("sparsity", Index{0});
  if (j.contains("N") && j["N"].get<Index>() != inst.n()) {
    throw InstanceError("instance manifest N disagrees with the CSV");
  }
  if (j.contains("d") && j["d"].get<Index>() != inst.d()) {
    throw InstanceError("instance manifest d disagrees with the CSV");
  }
  return inst;
}

}  // namespace mirrorflow
