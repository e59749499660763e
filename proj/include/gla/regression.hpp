#pragma once

#include <string>
#include <vector>

namespace gla {

struct RegressionOptions {
  // Multiplies every imaginary-part tolerance used to certify a bound state in the continuum.
  double im_tol_scale = 1.0;
};

enum class RowStatus { pass, fail, convergence_error, error };
const char* to_string(RowStatus s);

struct RegressionRow {
  int id = 0;
  std::string title;
  RowStatus status = RowStatus::error;
  std::string detail;
  double seconds = 0.0;
};

// Rows 1..acceptance_count() are the acceptance criteria; the rest are release checks.
constexpr int acceptance_count() { return 14; }
int regression_row_count();
std::string regression_title(int id);

// Failures and exceptions are reported in the row, never thrown.
RegressionRow run_regression_row(int id, const RegressionOptions& opts = {});
// Empty `ids` runs every row.
std::vector<RegressionRow> run_regression(const RegressionOptions& opts = {}, std::vector<int> ids = {});
std::string format_regression_table(const std::vector<RegressionRow>& rows);

}  // namespace gla
