// io.h — JSON config validation helpers, stable CSV number formatting, and
// the error taxonomy behind the CLI exit codes (0 ok, 1 tolerance violation,
// 2 input error).

#pragma once

#include <complex>
#include <initializer_list>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>
#include <json.hpp>

namespace qlb::io {

// Bad configs, malformed files, mismatched comparisons → exit code 2.
struct InputError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Violated numeric contract (infeasible window, failed tolerance) → exit 1.
struct ToleranceError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

using json = nlohmann::json;

// Rejects keys outside `allowed`; `where` names the object in the message.
void check_keys(const json& obj, std::initializer_list<const char*> allowed,
                const std::string& where);

json load_json_file(const std::string& path);

Eigen::MatrixXd parse_square_matrix(const json& rows, const std::string& where);

json matrix_to_json(const Eigen::MatrixXd& m);
// Complex entries as [re, im] pairs.
json matrix_to_json(const Eigen::MatrixXcd& m);

// Shortest stable formatting that round-trips doubles to ~1e-15 relative.
std::string format_double(double v);
std::string format_complex(std::complex<double> v);

void write_text_file(const std::string& path, const std::string& contents);

// Resolves a relative output path against QLB_OUT_DIR when set.
std::string resolve_output_path(const std::string& path);

}  // namespace qlb::io
