#pragma once

#include "rdpc/matrix_core.hpp"

#include <json.hpp>

#include <string>
#include <vector>

namespace rdpc::jsonio {

using json = nlohmann::json;

/// Matrices are stored row-major with explicit shape: {"rows", "cols", "data"}.
json to_json(const Mat& m);
Mat mat_from_json(const json& j);

json to_json(const Vec& v);
Vec vec_from_json(const json& j);

json to_json(const std::vector<Vec>& seq);
std::vector<Vec> seq_from_json(const json& j);

/// Shortest round-trip decimal representation, used by every CSV writer so
/// that identical runs produce byte-identical files.
std::string num(double x);

std::string read_file(const std::string& path);
/// Throws std::runtime_error if the file cannot be written.
void write_file(const std::string& path, const std::string& content);

}  // namespace rdpc::jsonio
