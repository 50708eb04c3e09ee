#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>

#include <nlohmann/json.hpp>

#include "freespectra/matops.hpp"

namespace fsp {

// CSV layout: one line per matrix row, each entry written as two columns
// "re,im". Values use the shortest round-trip form, so a write/read cycle is exact.
CMatrix read_matrix_csv(std::istream& in);
CMatrix read_matrix_csv(const std::filesystem::path& path);
void write_matrix_csv(std::ostream& out, const CMatrix& m);
void write_matrix_csv(const std::filesystem::path& path, const CMatrix& m);

// JSON layout: array of rows, each row an array of [re, im] pairs.
nlohmann::json matrix_to_json(const CMatrix& m);
CMatrix matrix_from_json(const nlohmann::json& j);

// Shortest decimal text that reads back to the same double.
std::string format_double(double x);

}  // namespace fsp
