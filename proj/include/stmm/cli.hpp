#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace stmm {

enum ExitCode { exit_ok = 0, exit_verify_failed = 1, exit_usage = 2 };

/// Entry point of the stmm command line; args excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Git blob id ("blob <size>\0" + content, SHA-1) of a byte string.
std::string git_blob_sha1(const std::string& content);

}  // namespace stmm
