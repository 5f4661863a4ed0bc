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

#include "litrev/embedding_store.hpp"

#include <zlib.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <future>
#include <semaphore>
#include <set>
#include <sstream>

#include "litrev/error.hpp"
#include "litrev/text.hpp"

namespace litrev::embedding {

using nlohmann::json;

namespace {

constexpr char kMagic[4] = {'L', 'R', 'V', 'S'};
constexpr std::uint32_t kVersion = 1;

void PutU32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}
void PutU64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

class Reader {
 public:
  explicit Reader(std::string_view data) : data_(data) {}
  std::uint64_t Uint(int bytes) {
    Need(static_cast<std::size_t>(bytes));
    std::uint64_t v = 0;
    for (int i = 0; i < bytes; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(data_[pos_ + i])) << (8 * i);
    pos_ += static_cast<std::size_t>(bytes);
    return v;
  }
  std::string_view Bytes(std::size_t n) {
    Need(n);
    auto s = data_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  std::size_t pos() const { return pos_; }
  bool done() const { return pos_ == data_.size(); }

 private:
  void Need(std::size_t n) const {
    if (pos_ + n > data_.size()) throw Error(ErrorCode::kCorruptDump, "shard file truncated");
  }
  std::string_view data_;
  std::size_t pos_ = 0;
};

double Norm(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

bool Better(const NeighborHit& a, const NeighborHit& b) {
  if (a.score != b.score) return a.score > b.score;
  return a.paper_id < b.paper_id;
}

std::string HexToBytes(const std::string& hex) {
  std::string out;
  for (std::size_t i = 0; i + 1 < hex.size(); i += 2) {
    out.push_back(static_cast<char>(std::stoi(hex.substr(i, 2), nullptr, 16)));
  }
  return out;
}

std::string BytesToHex(std::string_view bytes) {
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  for (unsigned char c : bytes) {
    out.push_back(kHex[c >> 4]);
    out.push_back(kHex[c & 0xF]);
  }
  return out;
}

}  // namespace

json ShardManifest::ToJson() const {
  return json{{"shard_id", shard_id}, {"count", count}, {"dim", dim}, {"checksum", checksum}};
}

ShardManifest ShardManifest::FromJson(const json& j) {
  ShardManifest m;
  m.shard_id = j.at("shard_id").get<int>();
  m.count = j.at("count").get<std::uint64_t>();
  m.dim = j.at("dim").get<std::uint32_t>();
  m.checksum = j.at("checksum").get<std::string>();
  return m;
}

ShardIndex ShardIndex::FromVectors(int shard_id, std::vector<std::pair<std::string, std::vector<double>>> rows,
                                   BuildReport* report) {
  BuildReport local;
  BuildReport& rep = report ? *report : local;
  ShardIndex shard;
  shard.manifest_.shard_id = shard_id;
  std::optional<std::size_t> dim;
  std::set<std::string> seen;
  for (auto& [id, vec] : rows) {
    if (!dim) dim = vec.size();
    if (vec.size() != *dim || vec.empty()) {
      throw Error(ErrorCode::kDimensionMismatch, "record '" + id + "' has dimension " + std::to_string(vec.size()) +
                                                     ", expected " + std::to_string(dim.value_or(0)));
    }
    const double norm = Norm(vec);
    if (!(norm > 0.0) || !std::isfinite(norm)) {
      ++rep.rejected_zero;
      rep.warnings.push_back("shard " + std::to_string(shard_id) + ": rejected zero or non-finite vector '" + id + "'");
      continue;
    }
    if (!seen.insert(id).second) {
      ++rep.rejected_duplicate;
      rep.warnings.push_back("shard " + std::to_string(shard_id) + ": rejected duplicate id '" + id + "'");
      continue;
    }
    shard.records_.push_back(EmbeddingRecord{std::move(id), std::move(vec), norm});
  }
  std::sort(shard.records_.begin(), shard.records_.end(),
            [](const auto& a, const auto& b) { return a.paper_id < b.paper_id; });
  shard.manifest_.dim = static_cast<std::uint32_t>(dim.value_or(0));
  shard.manifest_.count = shard.records_.size();
  shard.manifest_.checksum = shard.ComputeChecksum();
  return shard;
}

std::string ShardIndex::SerializePayload() const {
  std::string out;
  out.reserve(records_.size() * (manifest_.dim * 8 + 16));
  for (const auto& r : records_) {
    for (double x : r.vector) PutU64(out, std::bit_cast<std::uint64_t>(x));
  }
  for (const auto& r : records_) {
    PutU32(out, static_cast<std::uint32_t>(r.paper_id.size()));
    out += r.paper_id;
  }
  return out;
}

std::string ShardIndex::ComputeChecksum() const { return text::Sha256Hex(SerializePayload()); }

void ShardIndex::Save(const std::filesystem::path& path) const {
  std::string out(kMagic, 4);
  PutU32(out, kVersion);
  PutU64(out, manifest_.count);
  PutU32(out, manifest_.dim);
  PutU32(out, static_cast<std::uint32_t>(manifest_.shard_id));
  out += HexToBytes(manifest_.checksum);
  out += SerializePayload();

  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary);
    if (!f) throw Error(ErrorCode::kIo, "cannot write shard " + path.string());
    f.write(out.data(), static_cast<std::streamsize>(out.size()));
  }
  std::filesystem::rename(tmp, path);
}

ShardIndex ShardIndex::Load(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorCode::kIo, "cannot read shard " + path.string());
  std::string data((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  Reader rd(data);
  if (rd.Bytes(4) != std::string_view(kMagic, 4)) throw Error(ErrorCode::kCorruptDump, "bad shard magic");
  if (rd.Uint(4) != kVersion) throw Error(ErrorCode::kCorruptDump, "unsupported shard version");
  ShardIndex shard;
  shard.manifest_.count = rd.Uint(8);
  shard.manifest_.dim = static_cast<std::uint32_t>(rd.Uint(4));
  shard.manifest_.shard_id = static_cast<int>(rd.Uint(4));
  shard.manifest_.checksum = BytesToHex(rd.Bytes(32));
  const auto count = shard.manifest_.count;
  const auto dim = shard.manifest_.dim;
  if (count * dim * 8 > data.size()) throw Error(ErrorCode::kCorruptDump, "shard header overstates size");

  shard.records_.resize(count);
  for (auto& r : shard.records_) {
    r.vector.resize(dim);
    for (auto& x : r.vector) x = std::bit_cast<double>(rd.Uint(8));
    r.norm = Norm(r.vector);
  }
  for (auto& r : shard.records_) {
    auto len = rd.Uint(4);
    r.paper_id = std::string(rd.Bytes(len));
  }
  if (!rd.done()) throw Error(ErrorCode::kCorruptDump, "trailing bytes in shard " + path.string());
  if (shard.ComputeChecksum() != shard.manifest_.checksum) {
    throw Error(ErrorCode::kCorruptDump, "checksum mismatch in shard " + path.string());
  }
  return shard;
}

ShardIndex BuildShard(const std::filesystem::path& dump, int shard_id, BuildReport* report,
                      std::optional<std::uint32_t> expected_dim) {
  gzFile gz = gzopen(dump.string().c_str(), "rb");
  if (!gz) throw Error(ErrorCode::kCorruptDump, "cannot open dump " + dump.string());
  std::string content;
  char buf[1 << 16];
  int n;
  while ((n = gzread(gz, buf, sizeof buf)) > 0) content.append(buf, static_cast<std::size_t>(n));
  const bool failed = n < 0;
  gzclose(gz);
  if (failed) throw Error(ErrorCode::kCorruptDump, "decompression failed for " + dump.string());

  std::vector<std::pair<std::string, std::vector<double>>> rows;
  std::size_t line_no = 0;
  for (const auto& line : text::SplitLines(content)) {
    ++line_no;
    if (text::Trim(line).empty()) continue;
    auto j = json::parse(line, nullptr, false);
    auto where = dump.string() + ":" + std::to_string(line_no);
    if (j.is_discarded() || !j.is_object()) throw Error(ErrorCode::kCorruptDump, "unparseable record at " + where);
    json id;
    for (const char* key : {"paper_id", "corpusid", "id"}) {
      if (j.contains(key)) {
        id = j[key];
        break;
      }
    }
    json vec = j.contains("vector") ? j["vector"] : j.value("embedding", json());
    if (!(id.is_string() || id.is_number_integer()) || !vec.is_array()) {
      throw Error(ErrorCode::kCorruptDump, "record missing id or vector at " + where);
    }
    std::vector<double> v;
    v.reserve(vec.size());
    for (const auto& x : vec) {
      if (!x.is_number()) throw Error(ErrorCode::kCorruptDump, "non-numeric vector entry at " + where);
      v.push_back(x.get<double>());
    }
    if (expected_dim && v.size() != *expected_dim) {
      throw Error(ErrorCode::kDimensionMismatch, "vector at " + where + " has dimension " + std::to_string(v.size()) +
                                                     ", expected " + std::to_string(*expected_dim));
    }
    rows.emplace_back(id.is_string() ? id.get<std::string>() : id.dump(), std::move(v));
  }
  return ShardIndex::FromVectors(shard_id, std::move(rows), report);
}

double Cosine(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw Error(ErrorCode::kDimensionMismatch, "cosine of vectors with different dimension");
  double dot = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) dot += a[i] * b[i];
  const double denom = Norm(a) * Norm(b);
  if (!(denom > 0.0)) return 0.0;
  return std::clamp(dot / denom, -1.0, 1.0);
}

std::vector<NeighborHit> TopKShard(const ShardIndex& shard, std::span<const double> query, int k) {
  if (k < 1) throw Error(ErrorCode::kInvalidArgument, "k must be >= 1");
  if (query.size() != shard.dim()) {
    throw Error(ErrorCode::kDimensionMismatch, "query dimension " + std::to_string(query.size()) +
                                                   " != shard dimension " + std::to_string(shard.dim()));
  }
  const double qnorm = Norm(query);
  std::vector<NeighborHit> hits;
  hits.reserve(shard.size());
  for (const auto& r : shard.records()) {
    double dot = 0.0;
    for (std::size_t i = 0; i < query.size(); ++i) dot += query[i] * r.vector[i];
    const double score = qnorm > 0.0 ? std::clamp(dot / (qnorm * r.norm), -1.0, 1.0) : 0.0;
    hits.push_back(NeighborHit{r.paper_id, score, shard.manifest().shard_id});
  }
  const auto keep = std::min(hits.size(), static_cast<std::size_t>(k));
  std::partial_sort(hits.begin(), hits.begin() + static_cast<std::ptrdiff_t>(keep), hits.end(), Better);
  hits.resize(keep);
  return hits;
}

std::vector<NeighborHit> TopKGlobal(std::span<const ShardIndex* const> shards, std::span<const double> query, int k,
                                    int per_shard, int parallelism) {
  if (k < 1) throw Error(ErrorCode::kInvalidArgument, "k must be >= 1");
  if (per_shard < 1) throw Error(ErrorCode::kInvalidArgument, "per_shard must be >= 1");
  std::vector<std::vector<NeighborHit>> partial(shards.size());
  if (parallelism <= 1 || shards.size() <= 1) {
    for (std::size_t i = 0; i < shards.size(); ++i) partial[i] = TopKShard(*shards[i], query, per_shard);
  } else {
    std::counting_semaphore<> slots(parallelism);
    std::vector<std::future<void>> pending;
    for (std::size_t i = 0; i < shards.size(); ++i) {
      slots.acquire();
      pending.push_back(std::async(std::launch::async, [&, i] {
        struct Release {
          std::counting_semaphore<>& s;
          ~Release() { s.release(); }
        } release{slots};
        partial[i] = TopKShard(*shards[i], query, per_shard);
      }));
    }
    for (auto& f : pending) f.get();
  }
  std::vector<NeighborHit> merged;
  for (auto& p : partial) merged.insert(merged.end(), std::make_move_iterator(p.begin()), std::make_move_iterator(p.end()));
  std::sort(merged.begin(), merged.end(), Better);
  if (merged.size() > static_cast<std::size_t>(k)) merged.resize(static_cast<std::size_t>(k));
  return merged;
}

// ---------------------------------------------------------------------------

namespace {

std::string ShardFileName(int id) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04d.idx", id);
  return buf;
}

}  // namespace

ShardStore ShardStore::Build(const std::vector<std::filesystem::path>& dumps, const std::filesystem::path& dir,
                             int parallelism, std::vector<BuildReport>* reports) {
  if (dumps.empty()) throw Error(ErrorCode::kInvalidArgument, "no embedding dumps given");
  std::filesystem::create_directories(dir / "shards");
  ShardStore store;
  store.dir_ = dir;
  store.shards_.resize(dumps.size());
  std::vector<BuildReport> local(dumps.size());

  std::counting_semaphore<> slots(std::max(1, parallelism));
  std::vector<std::future<void>> pending;
  for (std::size_t i = 0; i < dumps.size(); ++i) {
    slots.acquire();
    pending.push_back(std::async(std::launch::async, [&, i] {
      struct Release {
        std::counting_semaphore<>& s;
        ~Release() { s.release(); }
      } release{slots};
      store.shards_[i] = BuildShard(dumps[i], static_cast<int>(i), &local[i]);
      store.shards_[i].Save(dir / "shards" / ShardFileName(static_cast<int>(i)));
    }));
  }
  for (auto& f : pending) f.get();

  std::optional<std::uint32_t> dim;
  json manifest{{"version", 1}, {"shards", json::array()}};
  for (const auto& s : store.shards_) {
    if (s.size() == 0) continue;
    if (dim && s.dim() != *dim) {
      throw Error(ErrorCode::kDimensionMismatch, "shards disagree on dimension");
    }
    dim = s.dim();
  }
  for (const auto& s : store.shards_) {
    auto m = s.manifest().ToJson();
    m["file"] = "shards/" + ShardFileName(s.manifest().shard_id);
    manifest["shards"].push_back(m);
  }
  manifest["dim"] = dim.value_or(0);
  std::ofstream out(dir / "manifest.json");
  out << manifest.dump(2) << '\n';
  if (reports) *reports = std::move(local);
  return store;
}

ShardStore ShardStore::Open(const std::filesystem::path& dir) {
  std::ifstream in(dir / "manifest.json");
  if (!in) throw Error(ErrorCode::kNotFound, "no manifest.json in " + dir.string());
  auto manifest = json::parse(in, nullptr, false);
  if (manifest.is_discarded()) throw Error(ErrorCode::kCorruptDump, "unparseable manifest in " + dir.string());
  ShardStore store;
  store.dir_ = dir;
  for (const auto& entry : manifest.at("shards")) {
    auto shard = ShardIndex::Load(dir / entry.at("file").get<std::string>());
    auto expected = ShardManifest::FromJson(entry);
    if (shard.manifest().checksum != expected.checksum) {
      throw Error(ErrorCode::kCorruptDump, "shard " + std::to_string(expected.shard_id) + " disagrees with manifest");
    }
    store.shards_.push_back(std::move(shard));
  }
  return store;
}

ShardStore::VerifyResult ShardStore::Verify() const {
  VerifyResult result;
  std::ifstream in(dir_ / "manifest.json");
  auto manifest = json::parse(in, nullptr, false);
  if (manifest.is_discarded()) {
    result.ok = false;
    result.problems.push_back("manifest.json unreadable");
    return result;
  }
  std::set<int> ids;
  for (const auto& entry : manifest.value("shards", json::array())) {
    auto expected = ShardManifest::FromJson(entry);
    const auto label = "shard " + std::to_string(expected.shard_id);
    if (!ids.insert(expected.shard_id).second) {
      result.problems.push_back(label + ": duplicate shard id");
      continue;
    }
    try {
      auto shard = ShardIndex::Load(dir_ / entry.at("file").get<std::string>());
      if (shard.manifest().count != expected.count) result.problems.push_back(label + ": count mismatch");
      if (shard.manifest().dim != expected.dim) result.problems.push_back(label + ": dimension mismatch");
      if (shard.manifest().checksum != expected.checksum) result.problems.push_back(label + ": checksum mismatch");
    } catch (const Error& e) {
      result.problems.push_back(label + ": " + e.what());
    }
  }
  result.ok = result.problems.empty();
  return result;
}

std::vector<NeighborHit> ShardStore::Query(std::span<const double> query, int k, int per_shard, int parallelism) const {
  std::vector<const ShardIndex*> ptrs;
  for (const auto& s : shards_) {
    if (s.size() > 0) ptrs.push_back(&s);
  }
  return TopKGlobal(ptrs, query, k, per_shard, parallelism);
}

std::uint32_t ShardStore::dim() const {
  for (const auto& s : shards_) {
    if (s.size() > 0) return s.dim();
  }
  return 0;
}

// ---------------------------------------------------------------------------

HashEmbeddingProvider::HashEmbeddingProvider(std::size_t dim, std::uint64_t seed) : dim_(dim), seed_(seed) {
  if (dim_ == 0) throw Error(ErrorCode::kInvalidArgument, "embedding dimension must be positive");
}

std::vector<double> HashEmbeddingProvider::Embed(std::string_view text_in) const {
  std::vector<double> v(dim_, 0.0);
  auto add_token = [&](std::string_view tok) {
    // FNV-1a, seeded.
    std::uint64_t h = 1469598103934665603ULL ^ seed_;
    for (unsigned char c : tok) {
      h ^= c;
      h *= 1099511628211ULL;
    }
    v[h % dim_] += ((h >> 63) & 1U) ? 1.0 : -1.0;
  };
  std::string cur;
  for (char c : text_in) {
    if (std::isalnum(static_cast<unsigned char>(c))) {
      cur.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    } else if (!cur.empty()) {
      add_token(cur);
      cur.clear();
    }
  }
  if (!cur.empty()) add_token(cur);
  const double n = Norm(v);
  if (n > 0.0) {
    for (auto& x : v) x /= n;
  }
  return v;
}

RankedList RankCandidatesByEmbedding(std::span<const double> query, const CandidateSet& pool) {
  if (query.empty() || !(Norm(query) > 0.0)) {
    throw Error(ErrorCode::kNoQueryVector, "query vector is empty or zero");
  }
  const bool any = std::any_of(pool.candidates.begin(), pool.candidates.end(),
                               [](const auto& p) { return p.embedding.has_value(); });
  if (!pool.candidates.empty() && !any) {
    throw Error(ErrorCode::kNoQueryVector, "no candidate carries an embedding to compare the query against");
  }

  struct Scored {
    std::string id;
    double cosine;
    bool has_vector;
  };
  std::vector<Scored> scored;
  for (const auto& p : pool.candidates) {
    const bool usable = p.embedding && p.embedding->size() == query.size() && Norm(*p.embedding) > 0.0;
    scored.push_back(Scored{p.paper_id, usable ? Cosine(query, *p.embedding) : 0.0, usable});
  }
  std::sort(scored.begin(), scored.end(), [](const Scored& a, const Scored& b) {
    if (a.has_vector != b.has_vector) return a.has_vector;
    if (a.cosine != b.cosine) return a.cosine > b.cosine;
    return a.id < b.id;
  });

  RankedList out;
  out.query_id = pool.query.source_id;
  out.strategy = RankStrategy::kEmbedding;
  for (const auto& s : scored) {
    out.ordering.push_back(s.id);
    RankEvidence ev;
    ev.score = s.has_vector ? (1.0 + s.cosine) / 2.0 : 0.0;
    ev.verified = s.has_vector;
    if (!s.has_vector) ev.flags.push_back("no_embedding");
    out.evidence[s.id] = std::move(ev);
  }
  return out;
}

RankedList RankCandidatesByEmbedding(const QueryAbstract& query, const EmbeddingProvider& provider,
                                     const CandidateSet& pool) {
  return RankCandidatesByEmbedding(provider.Embed(query.text), pool);
}

}  // namespace litrev::embedding
