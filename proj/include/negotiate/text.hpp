#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

// Small string helpers shared across modules.
namespace negotiate::text {

std::string to_lower(std::string_view s);
std::string_view trim(std::string_view s);
bool is_word_char(char c) noexcept;

/// Position of the first whole-word occurrence of `needle` in `haystack` at or
/// after `from`, or npos. Both arguments are compared as-is (no case folding).
std::size_t find_word(std::string_view haystack, std::string_view needle, std::size_t from = 0);

/// Case-insensitive search for `needle`; returns npos when absent.
std::size_t ifind(std::string_view haystack, std::string_view needle, std::size_t from = 0);

std::vector<std::string> split(std::string_view s, char sep);

/// Collapse tabs, carriage returns and newlines to single spaces.
std::string one_line(std::string_view s);

struct CsvRecord {
    std::size_t line = 0;  // 1-based line the record starts on
    std::vector<std::string> fields;
};

struct CsvDocument {
    std::vector<CsvRecord> records;
    /// Start line of a quoted field left open at end of input; that record is dropped.
    std::optional<std::size_t> unterminated_line;
};

/// RFC 4180 records: comma separated, double-quoted fields may contain commas,
/// doubled quotes and line breaks. Blank lines are skipped.
CsvDocument parse_csv(std::string_view data);

}  // namespace negotiate::text
