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

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "litrev/types.hpp"

namespace litrev::embedding {

struct EmbeddingRecord {
  std::string paper_id;
  std::vector<double> vector;
  double norm = 0.0;
};

struct ShardManifest {
  int shard_id = 0;
  std::uint64_t count = 0;
  std::uint32_t dim = 0;
  std::string checksum;  // hex SHA-256 over the vector block and id table

  nlohmann::json ToJson() const;
  static ShardManifest FromJson(const nlohmann::json& j);
};

struct NeighborHit {
  std::string paper_id;
  double score = 0.0;  // cosine similarity
  int shard_id = 0;
};

struct BuildReport {
  std::size_t rejected_zero = 0;
  std::size_t rejected_duplicate = 0;
  std::vector<std::string> warnings;
};

/// Immutable exact-search shard. Records are stored sorted by paper_id, so
/// the on-disk bytes and checksum do not depend on input order.
///
/// File layout (little-endian):
///   "LRVS" | u32 version | u64 count | u32 dim | u32 shard_id
///   | 32-byte SHA-256 | count*dim f64 vectors | count x (u32 len, bytes) ids
class ShardIndex {
 public:
  /// Rejects zero vectors and repeated ids (first kept), noting both in
  /// `report`. Throws DimensionMismatch when vectors disagree on dimension.
  static ShardIndex FromVectors(int shard_id, std::vector<std::pair<std::string, std::vector<double>>> rows,
                                BuildReport* report = nullptr);

  /// Throws CorruptDump on a bad header, truncation or checksum mismatch.
  static ShardIndex Load(const std::filesystem::path& path);
  void Save(const std::filesystem::path& path) const;

  const ShardManifest& manifest() const { return manifest_; }
  const std::vector<EmbeddingRecord>& records() const { return records_; }
  std::size_t size() const { return records_.size(); }
  std::uint32_t dim() const { return manifest_.dim; }

  std::string ComputeChecksum() const;

 private:
  std::string SerializePayload() const;

  ShardManifest manifest_;
  std::vector<EmbeddingRecord> records_;
};

/// Reads an embedding dump: NDJSON, optionally gzip-compressed, one
/// `{"paper_id"|"corpusid"|"id": ..., "vector"|"embedding": [...]}` per line.
/// Throws CorruptDump or DimensionMismatch.
ShardIndex BuildShard(const std::filesystem::path& dump, int shard_id, BuildReport* report = nullptr,
                      std::optional<std::uint32_t> expected_dim = std::nullopt);

double Cosine(std::span<const double> a, std::span<const double> b);

/// Exactly min(k, count) hits, score descending, ties by ascending paper_id.
std::vector<NeighborHit> TopKShard(const ShardIndex& shard, std::span<const double> query, int k);

/// Merges each shard's top `per_shard` by raw cosine into a global top-k.
/// Equals brute force over the union whenever per_shard >= k.
std::vector<NeighborHit> TopKGlobal(std::span<const ShardIndex* const> shards, std::span<const double> query,
                                    int k, int per_shard, int parallelism = 1);

/// Directory of shards: shards/NNNN.idx plus manifest.json.
class ShardStore {
 public:
  /// One worker per dump up to `parallelism`; shard ids follow dump order.
  static ShardStore Build(const std::vector<std::filesystem::path>& dumps, const std::filesystem::path& dir,
                          int parallelism = 4, std::vector<BuildReport>* reports = nullptr);
  static ShardStore Open(const std::filesystem::path& dir);

  struct VerifyResult {
    bool ok = true;
    std::vector<std::string> problems;
  };
  /// Re-reads every shard and checks count, dim and checksum against the
  /// manifest.
  VerifyResult Verify() const;

  std::vector<NeighborHit> Query(std::span<const double> query, int k, int per_shard, int parallelism = 1) const;

  const std::vector<ShardIndex>& shards() const { return shards_; }
  std::uint32_t dim() const;

 private:
  std::filesystem::path dir_;
  std::vector<ShardIndex> shards_;
};

class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;
  virtual std::vector<double> Embed(std::string_view text) const = 0;
  virtual std::size_t dim() const = 0;
};

/// Deterministic signed feature hashing of lowercase alphanumeric tokens,
/// L2-normalized. Empty text embeds to the zero vector.
class HashEmbeddingProvider : public EmbeddingProvider {
 public:
  explicit HashEmbeddingProvider(std::size_t dim, std::uint64_t seed = 0);
  std::vector<double> Embed(std::string_view text) const override;
  std::size_t dim() const override { return dim_; }

 private:
  std::size_t dim_;
  std::uint64_t seed_;
};

/// Sorts the pool by descending cosine to `query`, ties by paper_id.
/// Candidates without a usable embedding go to the tail flagged
/// "no_embedding". Evidence score is (1 + cosine) / 2.
/// Throws NoQueryVector for an empty or zero query vector, or when no
/// candidate carries an embedding.
RankedList RankCandidatesByEmbedding(std::span<const double> query, const CandidateSet& pool);
RankedList RankCandidatesByEmbedding(const QueryAbstract& query, const EmbeddingProvider& provider,
                                     const CandidateSet& pool);

}  // namespace litrev::embedding
