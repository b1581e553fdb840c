#pragma once

#include <sstream>
#include <string>
#include <vector>

#include "segkit/bench.hpp"
#include "segkit/cli.hpp"
#include "support/synthetic.hpp"

namespace segkit::testing {

struct CliResult {
  int code = 0;
  std::string out;
  std::string err;
};

inline CliResult run_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "segkit");
  std::ostringstream out, err;
  int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

// Files for an end-to-end run: a segmented training corpus, spot-the-word
// and acceptability pairs, similarity sets and embeddings over its words.
struct BenchFixture {
  std::string corpus, wuggy, blimp, simi_dev, simi_test, embeddings;
};

BenchFixture make_bench_fixture(const std::string& prefix, std::size_t sentences,
                                std::uint64_t seed);

}  // namespace segkit::testing
