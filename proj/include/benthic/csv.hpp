#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace benthic::csv {

// Splits one comma-separated record. Fields may be double-quoted; a doubled
// quote inside a quoted field is a literal quote. Returns false on an
// unterminated quote.
bool split_record(std::string_view line, std::vector<std::string> &fields);

// Quotes a field only when it contains a comma, quote, or leading/trailing
// space.
std::string escape(std::string_view field);

std::string format_double(double value);
bool parse_double(std::string_view text, double &out);

// Reads all lines of a file, stripping a trailing '\r'. Throws IoFailure.
std::vector<std::string> read_lines(const std::string &path);

// Writes `content` to `path`, replacing any existing file. Throws IoFailure.
void write_file(const std::string &path, std::string_view content);

} // namespace benthic::csv
