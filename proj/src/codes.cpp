#include "lpsim/codes.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <stdexcept>
#include <vector>

#include "json.hpp"

namespace lpsim {

namespace {

constexpr int kEnumerationBudgetK = 26;
constexpr double kTieTolerance = 1e-12;
// Incremental Gray-code scores drift by far less than this band, so any
// codeword that could participate in a tie is re-scored exactly.
constexpr double kTieCandidateBand = 1e-9;
constexpr double kLlrClip = 30.0;

void check_enumerable(const LinearCode& code) {
  if (code.k > kEnumerationBudgetK) {
    throw std::invalid_argument(
        "codebook enumeration budget exceeded: k > 26");
  }
  if (code.generator.size() != static_cast<std::size_t>(code.k)) {
    throw std::invalid_argument("generator must have exactly k rows");
  }
}

double exact_score(std::uint64_t mask, const std::vector<double>& delta) {
  double s = 0.0;
  while (mask != 0) {
    s += delta[std::countr_zero(mask)];
    mask &= mask - 1;
  }
  return s;
}

// Xor-basis insertion. Kept in insertion order: every basis element has the
// leading bits of all earlier elements cleared, which makes one reduction
// sweep a complete membership test.
int gf2_rank(const std::vector<std::uint64_t>& rows) {
  std::vector<std::uint64_t> basis;
  for (std::uint64_t row : rows) {
    for (std::uint64_t b : basis) row = std::min(row, row ^ b);
    if (row != 0) basis.push_back(row);
  }
  return static_cast<int>(basis.size());
}

}  // namespace

std::uint64_t encode(const LinearCode& code, std::span<const int> message) {
  if (message.size() != static_cast<std::size_t>(code.k)) {
    throw std::invalid_argument("encode: message length must equal k");
  }
  std::uint64_t word = 0;
  for (int j = 0; j < code.k; ++j) {
    if (message[j] != 0 && message[j] != 1) {
      throw std::invalid_argument("encode: message entries must be 0 or 1");
    }
    if (message[j]) word ^= code.generator[j];
  }
  return word;
}

void modulate(const LinearCode& code, std::uint64_t codeword,
              std::span<double> x_out) {
  if (x_out.size() != static_cast<std::size_t>(code.n)) {
    throw std::invalid_argument("modulate: output length must equal n");
  }
  for (int i = 0; i < code.n; ++i) {
    x_out[i] = ((codeword >> i) & 1u) ? 1.0 : -1.0;
  }
}

int hamming_weight(std::uint64_t word) { return std::popcount(word); }

std::map<int, std::int64_t> weight_distribution(const LinearCode& code) {
  check_enumerable(code);
  std::map<int, std::int64_t> counts;
  std::uint64_t mask = 0;
  const std::uint64_t total = std::uint64_t{1} << code.k;
  for (std::uint64_t t = 1; t < total; ++t) {
    mask ^= code.generator[std::countr_zero(t)];
    counts[std::popcount(mask)] += 1;
  }
  return counts;
}

double channel_llr(const GgdParams& params, double y) {
  const double a = std::pow(std::fabs(y + 1.0), params.p);
  const double b = std::pow(std::fabs(y - 1.0), params.p);
  return (a - b) / std::pow(params.alpha, params.p);
}

DecodeOutcome mld_decode(std::span<const double> received,
                         const LinearCode& code, double p, Rng& rng) {
  check_enumerable(code);
  if (received.size() != static_cast<std::size_t>(code.n)) {
    throw std::invalid_argument("mld_decode: received length must equal n");
  }
  if (!(p > 0.0)) throw std::invalid_argument("mld_decode: p must be > 0");

  // With costs sum_i |y_i - x_i|^p and the antipodal map, codeword c scores
  // score(c) = cost(zero word) - cost(c) = sum over set bits of delta, so
  // minimizing the cost is maximizing the score and the zero word scores 0.
  std::vector<double> delta(code.n);
  for (int i = 0; i < code.n; ++i) {
    delta[i] = std::pow(std::fabs(received[i] + 1.0), p) -
               std::pow(std::fabs(received[i] - 1.0), p);
  }

  const std::uint64_t total = std::uint64_t{1} << code.k;
  std::uint64_t mask = 0;
  double score = 0.0;
  double best = 0.0;
  std::uint64_t best_mask = 0;
  double second = -std::numeric_limits<double>::infinity();
  for (std::uint64_t t = 1; t < total; ++t) {
    const std::uint64_t row = code.generator[std::countr_zero(t)];
    mask ^= row;
    for (std::uint64_t bits = row; bits != 0; bits &= bits - 1) {
      const int i = std::countr_zero(bits);
      score += ((mask >> i) & 1u) ? delta[i] : -delta[i];
    }
    if (score > best) {
      second = best;
      best = score;
      best_mask = mask;
    } else if (score > second) {
      second = score;
    }
  }

  DecodeOutcome out;
  if (best - second > kTieCandidateBand) {
    out.decoded_word = best_mask;
    out.is_block_error = best_mask != 0;
    return out;
  }

  // Near-tie: re-score every candidate in the band exactly.
  std::vector<std::uint64_t> candidates;
  if (0.0 >= best - kTieCandidateBand) candidates.push_back(0);
  mask = 0;
  score = 0.0;
  for (std::uint64_t t = 1; t < total; ++t) {
    const std::uint64_t row = code.generator[std::countr_zero(t)];
    mask ^= row;
    for (std::uint64_t bits = row; bits != 0; bits &= bits - 1) {
      const int i = std::countr_zero(bits);
      score += ((mask >> i) & 1u) ? delta[i] : -delta[i];
    }
    if (score >= best - kTieCandidateBand) candidates.push_back(mask);
  }

  double exact_best = -std::numeric_limits<double>::infinity();
  for (std::uint64_t c : candidates) {
    exact_best = std::max(exact_best, exact_score(c, delta));
  }
  std::vector<std::uint64_t> tied;
  bool zero_tied = false;
  for (std::uint64_t c : candidates) {
    if (exact_score(c, delta) >= exact_best - kTieTolerance) {
      tied.push_back(c);
      if (c == 0) zero_tied = true;
    }
  }

  out.tie_flag = tied.size() >= 2;
  if (zero_tied && tied.size() >= 2) {
    const std::size_t pick =
        static_cast<std::size_t>(rng.uniform() * tied.size());
    out.decoded_word = tied[pick];
  } else {
    out.decoded_word = tied.front();
  }
  out.is_block_error = out.decoded_word != 0;
  return out;
}

DecodeOutcome sum_product_decode(std::span<const double> received,
                                 const LinearCode& code,
                                 const GgdParams& params, int max_iter) {
  if (code.parity_check.empty()) {
    throw std::invalid_argument(
        "sum_product_decode: code has no parity-check matrix");
  }
  if (received.size() != static_cast<std::size_t>(code.n)) {
    throw std::invalid_argument(
        "sum_product_decode: received length must equal n");
  }
  if (max_iter < 0) {
    throw std::invalid_argument("sum_product_decode: max_iter must be >= 0");
  }

  const int n = code.n;
  const int checks = static_cast<int>(code.parity_check.size());

  // Internal messages use ln P(0)/P(1) so the check rule is the plain
  // tanh product; the channel LLR is ln f(y|1)/f(y|0) and enters negated.
  std::vector<double> l_ch(n);
  for (int i = 0; i < n; ++i) {
    l_ch[i] = std::clamp(-channel_llr(params, received[i]), -kLlrClip,
                         kLlrClip);
  }

  std::vector<int> edge_var;
  std::vector<int> check_begin(checks + 1, 0);
  for (int c = 0; c < checks; ++c) {
    for (std::uint64_t bits = code.parity_check[c]; bits != 0;
         bits &= bits - 1) {
      edge_var.push_back(std::countr_zero(bits));
    }
    check_begin[c + 1] = static_cast<int>(edge_var.size());
  }
  std::vector<double> msg(edge_var.size(), 0.0);
  std::vector<double> totals(n);
  std::vector<double> tanh_buf;

  DecodeOutcome out;
  for (int iter = 0; iter <= max_iter; ++iter) {
    for (int i = 0; i < n; ++i) totals[i] = l_ch[i];
    for (std::size_t e = 0; e < edge_var.size(); ++e) {
      totals[edge_var[e]] += msg[e];
    }
    std::uint64_t word = 0;
    for (int i = 0; i < n; ++i) {
      if (totals[i] < 0.0) word |= std::uint64_t{1} << i;
    }
    bool satisfied = true;
    for (int c = 0; c < checks && satisfied; ++c) {
      satisfied = (std::popcount(word & code.parity_check[c]) % 2) == 0;
    }
    out.decoded_word = word;
    if (satisfied) {
      out.is_block_error = word != 0;
      return out;
    }
    if (iter == max_iter) break;

    for (int c = 0; c < checks; ++c) {
      const int lo = check_begin[c];
      const int hi = check_begin[c + 1];
      const int deg = hi - lo;
      tanh_buf.resize(deg);
      for (int j = 0; j < deg; ++j) {
        const double v2c = std::clamp(
            totals[edge_var[lo + j]] - msg[lo + j], -kLlrClip, kLlrClip);
        tanh_buf[j] = std::tanh(0.5 * v2c);
      }
      // Exclude-one products via prefix and suffix accumulation.
      double suffix = 1.0;
      std::vector<double> suffixes(deg);
      for (int j = deg - 1; j >= 0; --j) {
        suffixes[j] = suffix;
        suffix *= tanh_buf[j];
      }
      double prefix = 1.0;
      for (int j = 0; j < deg; ++j) {
        const double prod = prefix * suffixes[j];
        prefix *= tanh_buf[j];
        msg[lo + j] = std::clamp(2.0 * std::atanh(prod), -kLlrClip, kLlrClip);
      }
    }
  }

  out.failed = true;
  out.is_block_error = true;
  return out;
}

namespace {

std::uint64_t parse_bitstring(const nlohmann::json& entry, int n,
                              const std::string& field) {
  if (!entry.is_string()) {
    throw std::runtime_error("load_code: " + field + " rows must be strings");
  }
  const std::string s = entry.get<std::string>();
  if (s.size() != static_cast<std::size_t>(n)) {
    throw std::runtime_error("load_code: " + field +
                             " row length differs from n");
  }
  std::uint64_t word = 0;
  for (int i = 0; i < n; ++i) {
    if (s[i] == '1') {
      word |= std::uint64_t{1} << i;
    } else if (s[i] != '0') {
      throw std::runtime_error("load_code: " + field +
                               " rows must contain only '0' and '1'");
    }
  }
  return word;
}

}  // namespace

LinearCode load_code(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_code: cannot open " + path);
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw std::runtime_error("load_code: parse error in " + path + ": " +
                             e.what());
  }

  LinearCode code;
  try {
    code.name = doc.at("name").get<std::string>();
    code.n = doc.at("n").get<int>();
    code.k = doc.at("k").get<int>();
    if (code.n < 1 || code.n > 64) {
      throw std::runtime_error("load_code: n must be in [1, 64]");
    }
    if (code.k < 1 || code.k > code.n) {
      throw std::runtime_error("load_code: k must be in [1, n]");
    }

    const auto& gen = doc.at("generator");
    if (!gen.is_array() || gen.size() != static_cast<std::size_t>(code.k)) {
      throw std::runtime_error("load_code: generator must have k rows");
    }
    for (const auto& row : gen) {
      code.generator.push_back(parse_bitstring(row, code.n, "generator"));
    }
    if (gf2_rank(code.generator) != code.k) {
      throw std::runtime_error("load_code: generator is rank deficient");
    }

    if (doc.contains("parity_check")) {
      const auto& pc = doc.at("parity_check");
      if (!pc.is_array() || pc.empty()) {
        throw std::runtime_error("load_code: parity_check must be a nonempty "
                                 "array");
      }
      for (const auto& row : pc) {
        code.parity_check.push_back(parse_bitstring(row, code.n,
                                                    "parity_check"));
      }
      if (gf2_rank(code.parity_check) != code.n - code.k) {
        throw std::runtime_error(
            "load_code: parity_check rank differs from n - k");
      }
      for (std::uint64_t g : code.generator) {
        for (std::uint64_t h : code.parity_check) {
          if (std::popcount(g & h) % 2 != 0) {
            throw std::runtime_error(
                "load_code: generator and parity_check are not orthogonal");
          }
        }
      }
    }

    if (doc.contains("weight_distribution")) {
      for (const auto& [key, value] : doc.at("weight_distribution").items()) {
        int d = 0;
        try {
          d = std::stoi(key);
        } catch (const std::exception&) {
          throw std::runtime_error("load_code: weight key is not an integer");
        }
        const std::int64_t count = value.get<std::int64_t>();
        if (d < 1 || d > code.n || count < 1) {
          throw std::runtime_error("load_code: invalid weight table entry");
        }
        code.weight_distribution[d] = count;
      }
      if (code.k < 63) {
        std::int64_t sum = 0;
        for (const auto& [d, count] : code.weight_distribution) sum += count;
        const std::int64_t expected =
            static_cast<std::int64_t>((std::uint64_t{1} << code.k) - 1);
        if (sum != expected) {
          throw std::runtime_error(
              "load_code: weight table does not count 2^k - 1 nonzero words");
        }
      }
    }

    if (code.k <= kEnumerationBudgetK) {
      const auto enumerated = weight_distribution(code);
      if (!code.weight_distribution.empty() &&
          code.weight_distribution != enumerated) {
        throw std::runtime_error(
            "load_code: stored weight table contradicts enumeration");
      }
      code.weight_distribution = enumerated;
    }

    const int min_weight = code.weight_distribution.empty()
                               ? 0
                               : code.weight_distribution.begin()->first;
    if (doc.contains("d_min")) {
      code.d_min = doc.at("d_min").get<int>();
      if (code.d_min < 1 || code.d_min > code.n) {
        throw std::runtime_error("load_code: d_min out of range");
      }
      if (min_weight != 0 && code.d_min != min_weight) {
        throw std::runtime_error(
            "load_code: d_min contradicts the minimum codeword weight");
      }
      // Beyond the enumeration budget and without a weight table the stored
      // value is trusted; the bundled large code ships an externally
      // certified distance.
    } else if (min_weight != 0) {
      code.d_min = min_weight;
    } else {
      throw std::runtime_error(
          "load_code: d_min is required when it cannot be computed");
    }

  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error(std::string("load_code: invalid or missing "
                                         "field: ") +
                             e.what());
  }

  return code;
}

}  // namespace lpsim
