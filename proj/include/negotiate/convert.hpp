#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>

namespace negotiate {

struct ConvertResult {
    std::size_t rows = 0;
    std::size_t skipped = 0;  // rows with empty text
};

/// Rewrite a raw benchmark dump as the `text<TAB>label[<TAB>topic]` file that
/// load_dataset reads, with canonical label names and text on one line.
///
///   sst2     GLUE SST-2 tsv (sentence, label 0/1)
///   mr       directory with rt-polarity.pos and rt-polarity.neg
///   twitter  SemEval tsv: id, label, text  or  id, topic, label, text
///   yelp2    Yelp polarity csv: label (1 neg, 2 pos), text
///   amazon2  Amazon polarity csv: label (1 neg, 2 pos), title, text
///   imdb     a split directory with pos/ and neg/ review files
///
/// Throws ConfigError for an unknown name, IoError for unreadable input and
/// DatasetError listing rows whose label cannot be mapped.
ConvertResult convert_dataset(const std::string& name, const std::filesystem::path& input,
                              const std::filesystem::path& output);

/// Returns `s` unchanged when it is valid UTF-8, else decodes it as Latin-1.
std::string ensure_utf8(std::string_view s);

}  // namespace negotiate
