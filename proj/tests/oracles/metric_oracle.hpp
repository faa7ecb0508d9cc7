#pragma once

// Brute-force caption metrics over token lists. n-grams are vectors of words
// (no string joining); LCS is plain recursion with memoization.

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <set>
#include <string>
#include <vector>

namespace oracle {

using Sentence = std::vector<std::string>;
using Gram = std::vector<std::string>;

struct Entry {
  Sentence candidate;
  std::vector<Sentence> refs;
};

inline std::map<Gram, double> grams(const Sentence& s, std::size_t n) {
  std::map<Gram, double> out;
  for (std::size_t i = 0; i + n <= s.size(); ++i) out[Gram(s.begin() + i, s.begin() + i + n)] += 1.0;
  return out;
}

inline double bleu4(const std::vector<Entry>& corpus) {
  double matched[4] = {0, 0, 0, 0}, possible[4] = {0, 0, 0, 0};
  double c = 0.0, r = 0.0;
  for (const Entry& e : corpus) {
    c += e.candidate.size();
    double best_len = -1.0, best_gap = 1e300;
    for (const Sentence& ref : e.refs) {
      const double len = ref.size();
      const double gap = std::fabs(len - static_cast<double>(e.candidate.size()));
      if (gap < best_gap || (gap == best_gap && len < best_len)) best_gap = gap, best_len = len;
    }
    r += best_len;
    for (std::size_t n = 1; n <= 4; ++n) {
      for (const auto& [g, count] : grams(e.candidate, n)) {
        double cap = 0.0;
        for (const Sentence& ref : e.refs) {
          auto rg = grams(ref, n);
          if (rg.count(g)) cap = std::max(cap, rg[g]);
        }
        matched[n - 1] += std::min(count, cap);
        possible[n - 1] += count;
      }
    }
  }
  double prod = 1.0;
  for (int n = 0; n < 4; ++n) {
    if (matched[n] == 0.0) return 0.0;
    prod *= matched[n] / possible[n];
  }
  const double bp = c > r ? 1.0 : std::exp(1.0 - r / c);
  return bp * std::pow(prod, 0.25);
}

inline std::size_t lcs(const Sentence& a, const Sentence& b) {
  std::map<std::pair<std::size_t, std::size_t>, std::size_t> memo;
  std::function<std::size_t(std::size_t, std::size_t)> go = [&](std::size_t i, std::size_t j) -> std::size_t {
    if (i == a.size() || j == b.size()) return 0;
    auto key = std::make_pair(i, j);
    if (auto it = memo.find(key); it != memo.end()) return it->second;
    std::size_t v = a[i] == b[j] ? 1 + go(i + 1, j + 1) : std::max(go(i + 1, j), go(i, j + 1));
    return memo[key] = v;
  };
  return go(0, 0);
}

inline double rouge_l(const std::vector<Entry>& corpus) {
  const double beta = 1.2;
  double total = 0.0;
  for (const Entry& e : corpus) {
    double best = 0.0;
    for (const Sentence& ref : e.refs) {
      const double l = lcs(e.candidate, ref);
      if (l == 0) continue;
      const double p = l / e.candidate.size(), rc = l / ref.size();
      best = std::max(best, (1 + beta * beta) * p * rc / (rc + beta * beta * p));
    }
    total += best;
  }
  return total / corpus.size();
}

inline std::vector<double> cider_per_video(const std::vector<Entry>& corpus) {
  const double n_docs = corpus.size();
  std::map<Gram, double> df;
  for (const Entry& e : corpus) {
    std::set<Gram> seen;
    for (const Sentence& ref : e.refs)
      for (std::size_t n = 1; n <= 4; ++n)
        for (const auto& [g, c] : grams(ref, n)) seen.insert(g);
    for (const Gram& g : seen) df[g] += 1.0;
  }
  auto tfidf = [&](const Sentence& s, std::size_t n) {
    std::map<Gram, double> v;
    for (const auto& [g, tf] : grams(s, n)) v[g] = tf * std::log(n_docs / (1.0 + (df.count(g) ? df[g] : 0.0)));
    return v;
  };
  auto norm = [](const std::map<Gram, double>& v) {
    double s = 0.0;
    for (const auto& [g, w] : v) s += w * w;
    return std::sqrt(s);
  };
  std::vector<double> out;
  for (const Entry& e : corpus) {
    double sum = 0.0;
    for (const Sentence& ref : e.refs) {
      const double delta = static_cast<double>(e.candidate.size()) - static_cast<double>(ref.size());
      double per_n = 0.0;
      for (std::size_t n = 1; n <= 4; ++n) {
        auto vc = tfidf(e.candidate, n), vr = tfidf(ref, n);
        double num = 0.0;
        for (const auto& [g, w] : vc)
          if (vr.count(g)) num += std::min(w, vr[g]) * vr[g];
        const double nc = norm(vc), nr = norm(vr);
        double sim = (nc != 0.0 && nr != 0.0) ? num / (nc * nr) : num;
        per_n += sim * std::exp(-delta * delta / 72.0);
      }
      sum += per_n / 4.0;
    }
    out.push_back(10.0 * sum / e.refs.size());
  }
  return out;
}

inline double cider(const std::vector<Entry>& corpus) {
  auto v = cider_per_video(corpus);
  double s = 0.0;
  for (double x : v) s += x;
  return s / v.size();
}

}  // namespace oracle
