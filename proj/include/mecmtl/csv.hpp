#pragma once

#include <string>
#include <vector>

namespace mecmtl::csv {

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

/// RFC-4180-style reader: quoted fields, embedded commas/quotes, CR/LF.
/// The first record is taken as the header.
Table read_file(const std::string& path);
Table parse(const std::string& text);

std::string escape_field(const std::string& field);

/// Lossless double -> text (17 significant digits). NaN renders empty.
std::string format_double(double v);

}  // namespace mecmtl::csv
