#pragma once

#include <string>
#include <vector>

namespace lfd {

// Shortest round-trip decimal form of a double; stable across runs, so
// repeated invocations with identical inputs produce byte-identical files.
std::string format_double(double x);

// Splits one CSV record on commas. Fields are numeric or simple tokens;
// quoting is not supported and not needed by any file this library emits.
std::vector<std::string> split_csv_line(const std::string& line);

// Reads a whole CSV file into rows of fields, skipping blank lines.
std::vector<std::vector<std::string>> read_csv(const std::string& path);

// Writes lines joined with '\n' plus a trailing newline; throws on IO error.
void write_text_file(const std::string& path, const std::vector<std::string>& lines);

double parse_double(const std::string& field, const std::string& context = "value");

}  // namespace lfd
