#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <string>
#include <vector>

#include "canopy/data/inventory.hpp"

namespace canopy {

struct TileConfig {
  int zoom = 20;
  int width = 200;
  int height = 200;
  std::string maptype = "satellite";
  std::string base_url = "https://maps.googleapis.com/maps/api/staticmap";
  std::string api_key_env = "MAPS_API_KEY";
};

/// One static-map request centered on a tree's coordinates.
struct TileRequest {
  std::string id;
  double lat = 0.0;
  double lon = 0.0;
  int zoom = 20;
  int width = 200;
  int height = 200;
};

struct MissingApiKeyError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

TileRequest make_tile_request(const TreeRecord& record, const TileConfig& config);

/// Reads the API key from the configured environment variable; throws
/// MissingApiKeyError before any network activity when it is absent.
std::string tile_api_key(const TileConfig& config);

/// center=<lat>,<lon>&zoom=..&size=WxH&maptype=..&format=png&key=..
/// with coordinates printed to 6 decimal places.
std::string tile_url(const TileRequest& request, const TileConfig& config,
                     const std::string& api_key);

/// cache/<zoom>/<WxH>/<id>_<lat6>_<lon6>.png
std::filesystem::path tile_cache_path(const std::filesystem::path& cache_dir,
                                      const TileRequest& request);

struct HttpResponse {
  int status = 0;
  std::string body;
};

/// Minimal HTTP transport contract so fetching is mockable.
class TileClient {
 public:
  virtual ~TileClient() = default;
  virtual HttpResponse get(const std::string& url) = 0;
};

/// Serves deterministic synthetic PNG tiles keyed by the request URL.
/// Never touches the network. A scripted status queue can inject
/// failures (e.g. {429, 200}) ahead of the synthesized responses.
class MockTileClient : public TileClient {
 public:
  HttpResponse get(const std::string& url) override;

  void script_statuses(std::vector<int> statuses);
  std::size_t request_count() const;

 private:
  mutable std::mutex mutex_;
  std::vector<int> scripted_;
  std::size_t requests_ = 0;
};

/// Live transport over cpp-httplib (requires TLS support for https URLs).
class HttpTileClient : public TileClient {
 public:
  HttpResponse get(const std::string& url) override;
};

struct FetchOptions {
  std::filesystem::path cache_dir = "cache";
  int parallelism = 4;
  double requests_per_second = 0.0;  // 0 disables rate limiting
  int max_retries = 3;
  int backoff_initial_ms = 250;
};

enum class FetchOutcome { fetched, cached, failed };

struct FetchStatus {
  FetchOutcome outcome = FetchOutcome::failed;
  int http_status = 0;
  int attempts = 0;
  std::string error;
  std::filesystem::path path;
};

/// Downloads every request into the cache with bounded parallelism, a global
/// request-per-second limiter, and exponential backoff on 429/5xx. Other 4xx
/// statuses fail that record permanently without aborting the run. Cached
/// entries are not re-fetched; cache writes are write-temp-then-rename.
std::vector<FetchStatus> fetch_tiles(const std::vector<TileRequest>& requests, TileClient& client,
                                     const TileConfig& config, const std::string& api_key,
                                     const FetchOptions& options);

}  // namespace canopy
