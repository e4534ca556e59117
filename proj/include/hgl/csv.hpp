#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

namespace hgl {

struct NumericCsv {
  std::vector<std::string> header;
  Eigen::MatrixXd values;
};

/// Strict numeric CSV: one header row, then numeric cells only. Leading '#'
/// comment lines are skipped. Errors name file, line and column.
NumericCsv read_numeric_csv(const std::string& path);

/// Writes header + rows; values printed with 17 significant digits. When
/// seed_comment is non-empty it is emitted first as "# <seed_comment>".
void write_numeric_csv(const std::string& path, const std::vector<std::string>& header,
                       const Eigen::MatrixXd& values, const std::string& seed_comment = "");

std::string format_g17(double v);

}  // namespace hgl
