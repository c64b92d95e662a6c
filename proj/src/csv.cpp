#include "benthic/csv.hpp"

#include <charconv>
#include <fstream>

#include "benthic/error.hpp"

namespace benthic::csv {

bool split_record(std::string_view line, std::vector<std::string> &fields) {
	fields.clear();
	std::string field;
	bool quoted = false;
	bool was_quoted = false;
	for (std::size_t i = 0; i < line.size(); ++i) {
		const char c = line[i];
		if (quoted) {
			if (c == '"') {
				if (i + 1 < line.size() && line[i + 1] == '"') {
					field += '"';
					++i;
				} else {
					quoted = false;
				}
			} else {
				field += c;
			}
		} else if (c == '"' && field.empty() && !was_quoted) {
			quoted = true;
			was_quoted = true;
		} else if (c == ',') {
			fields.push_back(std::move(field));
			field.clear();
			was_quoted = false;
		} else {
			field += c;
		}
	}
	if (quoted) {
		return false;
	}
	fields.push_back(std::move(field));
	return true;
}

std::string escape(std::string_view field) {
	const bool needs = field.find_first_of(",\"\n") != std::string_view::npos ||
	                   (!field.empty() && (field.front() == ' ' || field.back() == ' '));
	if (!needs) {
		return std::string(field);
	}
	std::string out = "\"";
	for (char c : field) {
		if (c == '"') {
			out += '"';
		}
		out += c;
	}
	out += '"';
	return out;
}

std::string format_double(double value) {
	char buf[64];
	auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
	return std::string(buf, ptr);
}

bool parse_double(std::string_view text, double &out) {
	while (!text.empty() && text.front() == ' ') {
		text.remove_prefix(1);
	}
	while (!text.empty() && text.back() == ' ') {
		text.remove_suffix(1);
	}
	if (!text.empty() && text.front() == '+') {
		text.remove_prefix(1);
	}
	if (text.empty()) {
		return false;
	}
	auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
	return ec == std::errc() && ptr == text.data() + text.size();
}

std::vector<std::string> read_lines(const std::string &path) {
	std::ifstream in(path, std::ios::binary);
	if (!in) {
		fail(ErrorCode::IoFailure, "cannot open '" + path + "'");
	}
	std::vector<std::string> lines;
	std::string line;
	while (std::getline(in, line)) {
		if (!line.empty() && line.back() == '\r') {
			line.pop_back();
		}
		lines.push_back(std::move(line));
	}
	return lines;
}

void write_file(const std::string &path, std::string_view content) {
	std::ofstream out(path, std::ios::binary | std::ios::trunc);
	if (!out) {
		fail(ErrorCode::IoFailure, "cannot write '" + path + "'");
	}
	out.write(content.data(), static_cast<std::streamsize>(content.size()));
	if (!out) {
		fail(ErrorCode::IoFailure, "write to '" + path + "' failed");
	}
}

} // namespace benthic::csv
