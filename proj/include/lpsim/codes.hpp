#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "lpsim/ggd_channel.hpp"
#include "lpsim/rng.hpp"

namespace lpsim {

// Binary linear block code with rows packed into 64-bit words, so n <= 64.
// Bit i of a packed word is coordinate i of the codeword.
struct LinearCode {
  std::string name;
  int n = 0;
  int k = 0;
  std::vector<std::uint64_t> generator;
  // Optional parity-check rows for message-passing decoders. May contain
  // redundant rows; the loader enforces rank n - k and orthogonality to G.
  std::vector<std::uint64_t> parity_check;
  // Counts of nonzero codewords by Hamming weight (zero word excluded).
  std::map<int, std::int64_t> weight_distribution;
  int d_min = 0;
};

struct DecodeOutcome {
  std::uint64_t decoded_word = 0;
  // The simulated transmitted word is always the all-zero codeword, so this
  // flag is set when decoded_word is nonzero or the decoder failed.
  bool is_block_error = false;
  // Set when the decoding metric attains its optimum at two or more
  // codewords within absolute tolerance 1e-12.
  bool tie_flag = false;
  // Set when an iterative decoder stopped without reaching a codeword.
  bool failed = false;
};

// m * G over GF(2); message holds k entries in {0, 1}.
std::uint64_t encode(const LinearCode& code, std::span<const int> message);

// Antipodal signal map x_i = 2 b_i - 1 applied to a packed codeword.
void modulate(const LinearCode& code, std::uint64_t codeword,
              std::span<double> x_out);

int hamming_weight(std::uint64_t word);

// Exact weight counts over all 2^k codewords, zero word excluded.
// Throws std::invalid_argument when k > 26 (enumeration budget).
std::map<int, std::int64_t> weight_distribution(const LinearCode& code);

// Per-coordinate channel log-likelihood ratio ln f(y|b=1) / ln f(y|b=0)
// under the antipodal map, equal to (|y+1|^p - |y-1|^p) / alpha^p.
double channel_llr(const GgdParams& params, double y);

// Full-codebook minimum-distance decoding with the p-th-power metric
// sum_i |y_i - x_i|^p. Ties within 1e-12 that include the all-zero word are
// resolved by a uniform random pick among the tied words. Throws
// std::invalid_argument when k > 26.
DecodeOutcome mld_decode(std::span<const double> received,
                         const LinearCode& code, double p, Rng& rng);

// Flooding sum-product decoding on the parity-check graph with the
// tanh-product check rule, message clipping at |L| <= 30, and an early stop
// when the hard decision satisfies every check. A frame that never satisfies
// the checks within max_iter is reported as failed and counts as an error.
// Throws std::invalid_argument when the code has no parity_check.
DecodeOutcome sum_product_decode(std::span<const double> received,
                                 const LinearCode& code,
                                 const GgdParams& params, int max_iter = 50);

// Reads a code description from a JSON file with fields {name, n, k,
// generator, parity_check?, weight_distribution?, d_min?} where matrices are
// arrays of '0'/'1' strings in left-to-right coordinate order. Validates
// rank, orthogonality, and, when k <= 26, the stored weight table and d_min
// against exhaustive enumeration. Throws std::runtime_error on any failure.
LinearCode load_code(const std::string& path);

}  // namespace lpsim
