#include "canopy/data/tiles.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <thread>

#include "canopy/image_io.hpp"
#include "canopy/rng.hpp"

#ifdef CANOPY_HAVE_OPENSSL
#define CPPHTTPLIB_OPENSSL_SUPPORT
#endif
#include "httplib.h"

namespace canopy {

namespace {

std::string format_coord(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

std::string sanitize_id(const std::string& id) {
  std::string out;
  for (char c : id) {
    const unsigned char u = static_cast<unsigned char>(c);
    out += (std::isalnum(u) || c == '-' || c == '_') ? c : '_';
  }
  return out.empty() ? "unnamed" : out;
}

}  // namespace

TileRequest make_tile_request(const TreeRecord& record, const TileConfig& config) {
  TileRequest r;
  r.id = record.id;
  r.lat = record.latitude;
  r.lon = record.longitude;
  r.zoom = config.zoom;
  r.width = config.width;
  r.height = config.height;
  return r;
}

std::string tile_api_key(const TileConfig& config) {
  const char* key = std::getenv(config.api_key_env.c_str());
  if (!key || !*key) {
    throw MissingApiKeyError("environment variable " + config.api_key_env +
                             " is not set; refusing to start tile fetch");
  }
  return key;
}

std::string tile_url(const TileRequest& request, const TileConfig& config,
                     const std::string& api_key) {
  std::string url = config.base_url;
  url += "?center=" + format_coord(request.lat) + "," + format_coord(request.lon);
  url += "&zoom=" + std::to_string(request.zoom);
  url += "&size=" + std::to_string(request.width) + "x" + std::to_string(request.height);
  url += "&maptype=" + config.maptype;
  url += "&format=png";
  url += "&key=" + api_key;
  return url;
}

std::filesystem::path tile_cache_path(const std::filesystem::path& cache_dir,
                                      const TileRequest& request) {
  return cache_dir / std::to_string(request.zoom) /
         (std::to_string(request.width) + "x" + std::to_string(request.height)) /
         (sanitize_id(request.id) + "_" + format_coord(request.lat) + "_" +
          format_coord(request.lon) + ".png");
}

HttpResponse MockTileClient::get(const std::string& url) {
  int scripted_status = 0;
  {
    std::lock_guard<std::mutex> lock(mutex_);
    ++requests_;
    if (!scripted_.empty()) {
      scripted_status = scripted_.front();
      scripted_.erase(scripted_.begin());
    }
  }
  if (scripted_status != 0 && scripted_status != 200) {
    return {scripted_status, ""};
  }

  std::size_t w = 200, h = 200;
  if (const auto pos = url.find("size="); pos != std::string::npos) {
    unsigned pw = 0, ph = 0;
    if (std::sscanf(url.c_str() + pos, "size=%ux%u", &pw, &ph) == 2 && pw > 0 && ph > 0) {
      w = pw;
      h = ph;
    }
  }
  // Smooth deterministic pseudo-terrain keyed by the full URL.
  RngStream rng(RngStream::hash_key(url));
  const double fx = rng.uniform(0.02, 0.3), fy = rng.uniform(0.02, 0.3);
  const double px = rng.uniform(0.0, 6.28), py = rng.uniform(0.0, 6.28);
  const double base_r = rng.uniform(0.1, 0.5), base_g = rng.uniform(0.3, 0.7);
  const double base_b = rng.uniform(0.05, 0.4);
  ImageU8 img;
  img.width = w;
  img.height = h;
  img.rgb.resize(w * h * 3);
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      const double t =
          0.25 * (2.0 + std::sin(fx * static_cast<double>(x) + px) +
                  std::cos(fy * static_cast<double>(y) + py));
      auto level = [&](double base) {
        const double v = std::clamp(base + 0.4 * t, 0.0, 1.0);
        return static_cast<std::uint8_t>(v * 255.0);
      };
      std::uint8_t* px3 = img.rgb.data() + (y * w + x) * 3;
      px3[0] = level(base_r);
      px3[1] = level(base_g);
      px3[2] = level(base_b);
    }
  }
  const auto bytes = encode_png(img);
  return {200, std::string(bytes.begin(), bytes.end())};
}

void MockTileClient::script_statuses(std::vector<int> statuses) {
  std::lock_guard<std::mutex> lock(mutex_);
  scripted_ = std::move(statuses);
}

std::size_t MockTileClient::request_count() const {
  std::lock_guard<std::mutex> lock(mutex_);
  return requests_;
}

HttpResponse HttpTileClient::get(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) {
    throw std::invalid_argument("tile fetch: malformed URL " + url);
  }
  const auto path_start = url.find('/', scheme_end + 3);
  const std::string origin = path_start == std::string::npos ? url : url.substr(0, path_start);
  const std::string path = path_start == std::string::npos ? "/" : url.substr(path_start);
#ifndef CANOPY_HAVE_OPENSSL
  if (url.rfind("https://", 0) == 0) {
    throw std::runtime_error("tile fetch: built without TLS support, cannot request " + origin);
  }
#endif
  httplib::Client client(origin);
  client.set_connection_timeout(15);
  client.set_read_timeout(30);
  auto result = client.Get(path);
  if (!result) return {0, "transport error: " + httplib::to_string(result.error())};
  return {result->status, result->body};
}

namespace {

class RateLimiter {
 public:
  explicit RateLimiter(double requests_per_second) {
    if (requests_per_second > 0.0) {
      interval_ = std::chrono::duration_cast<std::chrono::nanoseconds>(
          std::chrono::duration<double>(1.0 / requests_per_second));
    }
  }

  void acquire() {
    if (interval_.count() == 0) return;
    std::chrono::steady_clock::time_point slot;
    {
      std::lock_guard<std::mutex> lock(mutex_);
      const auto now = std::chrono::steady_clock::now();
      slot = next_ < now ? now : next_;
      next_ = slot + interval_;
    }
    std::this_thread::sleep_until(slot);
  }

 private:
  std::mutex mutex_;
  std::chrono::steady_clock::time_point next_{};
  std::chrono::nanoseconds interval_{0};
};

void write_atomically(const std::filesystem::path& path, const std::string& bytes,
                      std::size_t uniq) {
  std::filesystem::create_directories(path.parent_path());
  const std::filesystem::path tmp = path.string() + ".tmp" + std::to_string(uniq);
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("tile cache: cannot open " + tmp.string());
    f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!f) throw std::runtime_error("tile cache: write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace

std::vector<FetchStatus> fetch_tiles(const std::vector<TileRequest>& requests, TileClient& client,
                                     const TileConfig& config, const std::string& api_key,
                                     const FetchOptions& options) {
  std::vector<FetchStatus> statuses(requests.size());
  if (requests.empty()) return statuses;

  RateLimiter limiter(options.requests_per_second);
  std::atomic<std::size_t> cursor{0};

  auto worker = [&] {
    for (;;) {
      const std::size_t i = cursor.fetch_add(1);
      if (i >= requests.size()) return;
      const TileRequest& req = requests[i];
      FetchStatus& st = statuses[i];
      st.path = tile_cache_path(options.cache_dir, req);
      if (std::filesystem::exists(st.path)) {
        st.outcome = FetchOutcome::cached;
        continue;
      }
      const std::string url = tile_url(req, config, api_key);
      for (int attempt = 0;; ++attempt) {
        limiter.acquire();
        HttpResponse resp = client.get(url);
        st.http_status = resp.status;
        ++st.attempts;
        if (resp.status == 200) {
          write_atomically(st.path, resp.body, i);
          st.outcome = FetchOutcome::fetched;
          break;
        }
        const bool retryable = resp.status == 429 || resp.status >= 500 || resp.status == 0;
        if (!retryable) {
          st.outcome = FetchOutcome::failed;
          st.error = "HTTP " + std::to_string(resp.status);
          break;
        }
        if (attempt >= options.max_retries) {
          st.outcome = FetchOutcome::failed;
          st.error = "retries exhausted (last status " + std::to_string(resp.status) + ")";
          break;
        }
        const auto delay = std::chrono::milliseconds(options.backoff_initial_ms) * (1 << attempt);
        std::this_thread::sleep_for(delay);
      }
    }
  };

  const std::size_t n_threads =
      std::min<std::size_t>(static_cast<std::size_t>(std::max(options.parallelism, 1)),
                            requests.size());
  std::vector<std::thread> threads;
  threads.reserve(n_threads);
  for (std::size_t t = 0; t < n_threads; ++t) threads.emplace_back(worker);
  for (auto& t : threads) t.join();
  return statuses;
}

}  // namespace canopy
