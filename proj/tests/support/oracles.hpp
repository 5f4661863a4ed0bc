// Copyright 2026 The litrev Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


// Brute-force reference implementations. They share no code with the
// library and favour obviousness over speed.

#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace litrev::oracle {

inline int HitsInTop(const std::vector<std::string>& retrieved, const std::set<std::string>& gt, int k) {
  int hits = 0;
  for (int i = 0; i < k && i < static_cast<int>(retrieved.size()); ++i) {
    for (const auto& g : gt) {
      if (g == retrieved[static_cast<std::size_t>(i)]) ++hits;
    }
  }
  return hits;
}

inline double Precision(const std::vector<std::string>& retrieved, const std::set<std::string>& gt, int k) {
  return static_cast<double>(HitsInTop(retrieved, gt, k)) / k;
}

inline std::optional<double> NormalizedRecall(const std::vector<std::string>& retrieved,
                                              const std::set<std::string>& gt, int k) {
  const int all = HitsInTop(retrieved, gt, static_cast<int>(retrieved.size()));
  if (all == 0) return std::nullopt;
  return static_cast<double>(HitsInTop(retrieved, gt, k)) / all;
}

inline std::optional<double> ClassicRecall(const std::vector<std::string>& retrieved,
                                           const std::set<std::string>& gt, int k) {
  if (gt.empty()) return std::nullopt;
  return static_cast<double>(HitsInTop(retrieved, gt, k)) / static_cast<double>(gt.size());
}

inline double Dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

/// Every (id, vector) scored by cosine; best k by score then id.
inline std::vector<std::pair<std::string, double>> TopK(
    const std::vector<std::pair<std::string, std::vector<double>>>& rows, const std::vector<double>& q, int k) {
  std::vector<std::pair<std::string, double>> scored;
  for (const auto& [id, v] : rows) {
    scored.emplace_back(id, Dot(v, q) / (std::sqrt(Dot(v, v)) * std::sqrt(Dot(q, q))));
  }
  std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  if (static_cast<int>(scored.size()) > k) scored.resize(static_cast<std::size_t>(k));
  return scored;
}

inline std::vector<std::string> Tokens(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : s) {
    if (std::isalnum(static_cast<unsigned char>(ch)) && static_cast<unsigned char>(ch) < 128) {
      cur += static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
    } else if (!cur.empty()) {
      out.push_back(cur);
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

struct Prf {
  double p = 0, r = 0, f = 0;
};

inline Prf FromCounts(double overlap, double hyp_total, double ref_total) {
  Prf s;
  if (hyp_total > 0) s.p = overlap / hyp_total;
  if (ref_total > 0) s.r = overlap / ref_total;
  if (s.p + s.r > 0) s.f = 2 * s.p * s.r / (s.p + s.r);
  return s;
}

inline Prf RougeN(const std::string& ref, const std::string& hyp, std::size_t n) {
  auto grams = [n](const std::vector<std::string>& t) {
    std::vector<std::vector<std::string>> g;
    for (std::size_t i = 0; i + n <= t.size(); ++i) g.emplace_back(t.begin() + i, t.begin() + i + n);
    return g;
  };
  auto rg = grams(Tokens(ref));
  const auto hg = grams(Tokens(hyp));
  const double ref_total = static_cast<double>(rg.size());
  double overlap = 0;
  // Greedy one-to-one matching equals clipped counting.
  for (const auto& g : hg) {
    auto it = std::find(rg.begin(), rg.end(), g);
    if (it != rg.end()) {
      ++overlap;
      rg.erase(it);
    }
  }
  return FromCounts(overlap, static_cast<double>(hg.size()), ref_total);
}

inline std::size_t LcsLength(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  std::vector<std::vector<std::size_t>> t(a.size() + 1, std::vector<std::size_t>(b.size() + 1, 0));
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      t[i][j] = a[i - 1] == b[j - 1] ? t[i - 1][j - 1] + 1 : std::max(t[i - 1][j], t[i][j - 1]);
    }
  }
  return t[a.size()][b.size()];
}

inline Prf RougeL(const std::string& ref, const std::string& hyp) {
  const auto r = Tokens(ref);
  const auto h = Tokens(hyp);
  return FromCounts(static_cast<double>(LcsLength(r, h)), static_cast<double>(h.size()),
                    static_cast<double>(r.size()));
}

}  // namespace litrev::oracle
