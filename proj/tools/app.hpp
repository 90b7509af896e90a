#pragma once

#include <iosfwd>
#include <optional>
#include <string>

namespace pertlab::app {

// Exit codes.
inline constexpr int kOk = 0;
inline constexpr int kCheckFailed = 1;
inline constexpr int kBadInput = 2;
inline constexpr int kRuntimeError = 3;

struct Options {
  std::string command;
  std::optional<std::string> config;
  std::string out = "run";
  std::optional<std::string> input;  // plan file; defaults to <out>/plan.json
  unsigned threads = 1;
  bool exact = false;
  std::optional<int> u;
  std::optional<std::string> t;
  std::optional<int> alpha;
};

int run(int argc, char** argv, std::ostream& out, std::ostream& err);
int dispatch(const Options& opts, std::ostream& out, std::ostream& err);

}  // namespace pertlab::app
