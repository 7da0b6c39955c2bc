#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "tunnelkit/band.hpp"
#include "tunnelkit/compare.hpp"
#include "tunnelkit/config.hpp"
#include "tunnelkit/eikonal.hpp"
#include "tunnelkit/geometry.hpp"
#include "tunnelkit/tunneling.hpp"
#include "tunnelkit/wkb.hpp"

namespace tk {

std::uint64_t fnv1a64(const std::string& data);
std::string hex64(std::uint64_t v);

// Canonical key strings; the cache file name is the hash of the key.
std::string band_cache_key(int k, const BandOptions& opt);
std::string geometry_cache_key(const CurveSpec& curve, const FieldSpec& field, const GeometryOptions& opt);

std::string band_to_json(const BandTable& t);
BandTable band_from_json(const std::string& text);
std::string geometry_to_json(const GeometryProfile& p);
GeometryProfile geometry_from_json(const std::string& text);

enum class CacheState { Disabled, Miss, Hit, Corrupted, VersionMismatch };
const char* cache_state_name(CacheState s);

// Content-addressed JSON files under one directory. Files record the code version
// and the full key; anything unreadable, stale or mismatched is treated as a miss.
class ArtifactCache {
 public:
  explicit ArtifactCache(std::string dir);
  ~ArtifactCache();
  ArtifactCache(const ArtifactCache&) = delete;
  ArtifactCache& operator=(const ArtifactCache&) = delete;

  std::string path(const std::string& kind, const std::string& key) const;
  // Payload text on a hit; state reports why not otherwise.
  std::optional<std::string> load(const std::string& kind, const std::string& key, CacheState& state) const;
  void store(const std::string& kind, const std::string& key, const std::string& payload) const;

 private:
  std::string dir_;
  int lock_fd_ = -1;  // advisory lock held for the lifetime of the cache object
};

class Pipeline {
 public:
  explicit Pipeline(RunConfig cfg);
  ~Pipeline();

  const RunConfig& config() const { return cfg_; }
  const BandTable& band();
  const GeometryProfile& geometry();
  const EikonalSolution& right();
  const EikonalSolution& left();
  const AgmonDistances& distances();
  const WkbConstants& wkb();
  const TunnelingConstants& constants();

  // Runs one stage and writes its artifacts into the output directory.
  void run_stage(const std::string& stage);
  void run(const std::vector<std::string>& stages);

  CacheState band_cache_state() const { return band_state_; }
  CacheState geometry_cache_state() const { return geometry_state_; }
  const std::vector<std::string>& notices() const { return notices_; }

 private:
  void notice(const std::string& msg);
  void write_file(const std::string& name, const std::string& content) const;

  RunConfig cfg_;
  std::unique_ptr<ArtifactCache> cache_;
  std::optional<BandTable> band_;
  std::optional<GeometryProfile> geometry_;
  std::optional<EikonalSolution> right_, left_;
  std::optional<AgmonDistances> distances_;
  std::unique_ptr<MontgomeryFamily> family_;
  std::optional<WkbConstants> wkb_;
  std::optional<TunnelingConstants> constants_;
  CacheState band_state_ = CacheState::Disabled, geometry_state_ = CacheState::Disabled;
  std::vector<std::string> notices_;
};

// Stages run by a subcommand; "all" expands to the full chain.
std::vector<std::string> stages_for(const std::string& subcommand);

}  // namespace tk
