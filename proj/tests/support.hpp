#pragma once

// Fixtures shared by the unit suites and the acceptance runner.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "negotiate/domain.hpp"
#include "negotiate/prompting.hpp"

namespace testing_support {

class TempDir {
public:
    TempDir() {
        std::string tmpl = (std::filesystem::temp_directory_path() / "negotiate-XXXXXX").string();
        if (!mkdtemp(tmpl.data())) throw std::runtime_error("mkdtemp failed");
        path_ = tmpl;
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

inline std::string read_file(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

inline void write_file(const std::filesystem::path& p, const std::string& content) {
    std::filesystem::create_directories(p.parent_path());
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    out << content;
}

inline negotiate::Example example(const std::string& id, const std::string& text, const std::string& gold) {
    return negotiate::Example{id, text, negotiate::Label{gold}, std::nullopt};
}

/// Generator answer in the response grammar.
inline std::string gen(const std::string& label, bool reasoning = true) {
    std::string out = "The input contains " + label + " sentiment.";
    if (reasoning) out += " Rationale: Step 1: The wording leans " + label + ". Step 2: Nothing contradicts it.";
    return out;
}

inline std::string yes(bool reasoning = true) {
    return reasoning ? "Yes. The rationale holds up." : "Yes.";
}

inline std::string no(const std::string& label, bool reasoning = true) {
    return std::string("No.") + (reasoning ? " The input reads otherwise." : "") + " The input contains " + label +
           " sentiment.";
}

inline std::size_t count_occurrences(const std::string& hay, const std::string& needle) {
    std::size_t n = 0;
    for (auto pos = hay.find(needle); pos != std::string::npos; pos = hay.find(needle, pos + needle.size())) ++n;
    return n;
}

}  // namespace testing_support
