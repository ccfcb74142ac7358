#pragma once

// Text format for scheme files:
//
//   shape=[3,3,3]
//   format=kg
//   field=Q
//   rank=14
//   profile=(0,0,0)      optional
//   criterion=none
//   lift=F3:10           optional, provenance of lifted schemes
//   1 0 -1 ; 0 1/2 0 0 0 0 0 0 0 ; 1 0 0 0 0 0 0 0 0
//
// One term per line, factors u ; v ; w separated by semicolons. Lines
// starting with '#' are comments.

#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>

#include "stmm/scheme.hpp"

namespace stmm {

class ParseError : public std::runtime_error {
public:
    ParseError(int line, const std::string& detail, const std::string& source = {})
        : std::runtime_error((source.empty() ? "" : source + ": ") + "line " + std::to_string(line) + ": " + detail),
          line_(line), detail_(detail) {}
    int line() const { return line_; }
    const std::string& detail() const { return detail_; }

private:
    int line_;
    std::string detail_;
};

std::string serialize(const ExactScheme& s);
ExactScheme deserialize(std::string_view text);

ExactScheme read_scheme_file(const std::filesystem::path& path);
void write_scheme_file(const std::filesystem::path& path, const ExactScheme& s);

}  // namespace stmm
