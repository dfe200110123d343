#include "pwc/cloud.hpp"

#include <cfloat>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <stdexcept>
#include <string>
#include <system_error>

namespace pwc {

Bounds PointCloud::bounds() const {
  if (cached_bounds) return *cached_bounds;
  Bounds b;
  if (positions.empty()) return b;
  b.min = b.max = positions[0];
  for (const Vec3& p : positions) {
    b.min.x = std::min(b.min.x, p.x);
    b.min.y = std::min(b.min.y, p.y);
    b.min.z = std::min(b.min.z, p.z);
    b.max.x = std::max(b.max.x, p.x);
    b.max.y = std::max(b.max.y, p.y);
    b.max.z = std::max(b.max.z, p.z);
  }
  return b;
}

void PointCloud::refresh_bounds() {
  cached_bounds.reset();
  cached_bounds = bounds();
}

void PointCloud::validate() const {
  for (const Vec3& p : positions) {
    if (!p.finite()) throw std::invalid_argument("point cloud has non-finite coordinates");
  }
  if (!labels.empty() && labels.size() != positions.size()) {
    throw std::invalid_argument("label count does not match point count");
  }
  for (int l : labels) {
    if (l < 0) throw std::invalid_argument("negative class label");
  }
  if (attributes.size() != positions.size() * static_cast<std::size_t>(attr_channels)) {
    throw std::invalid_argument("attribute row count does not match point count");
  }
}

namespace {

const char* skip_ws(const char* p, const char* end) {
  while (p < end && (*p == ' ' || *p == '\t' || *p == '\r')) ++p;
  return p;
}

const char* token_end(const char* p, const char* end) {
  while (p < end && *p != ' ' && *p != '\t' && *p != '\r') ++p;
  return p;
}

double parse_double(const char* b, const char* e, const std::string& path, int line) {
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(b, e, value);
  if (ec != std::errc() || ptr != e) {
    throw std::invalid_argument(path + ":" + std::to_string(line) + ": malformed numeric field '" +
                                std::string(b, e) + "'");
  }
  return value;
}

int parse_label(const char* b, const char* e, const std::string& path, int line) {
  long value = 0;
  auto [ptr, ec] = std::from_chars(b, e, value);
  if (ec != std::errc() || ptr != e || value < 0) {
    throw std::invalid_argument(path + ":" + std::to_string(line) +
                                ": label must be a non-negative integer, got '" +
                                std::string(b, e) + "'");
  }
  return static_cast<int>(value);
}

}  // namespace

PointCloud load_cloud(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open cloud file: " + path);

  PointCloud cloud;
  std::string line;
  int line_no = 0;
  int arity = 0;  // 3 or 4 once the first data line is seen
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    const char* p = line.data();
    const char* end = line.data() + line.size();
    p = skip_ws(p, end);
    if (p == end) continue;

    const char* fields[5];
    const char* ends[5];
    int n = 0;
    while (p < end && n < 5) {
      fields[n] = p;
      ends[n] = token_end(p, end);
      p = skip_ws(ends[n], end);
      ++n;
    }
    if (n != 3 && n != 4) {
      throw std::invalid_argument(path + ":" + std::to_string(line_no) +
                                  ": expected 3 or 4 fields, got " + std::to_string(n));
    }
    if (arity == 0) {
      arity = n;
    } else if (arity != n) {
      throw std::invalid_argument(path + ":" + std::to_string(line_no) +
                                  ": mixed 3- and 4-field lines");
    }

    Vec3 pos{parse_double(fields[0], ends[0], path, line_no),
             parse_double(fields[1], ends[1], path, line_no),
             parse_double(fields[2], ends[2], path, line_no)};
    if (!pos.finite()) {
      throw std::invalid_argument(path + ":" + std::to_string(line_no) +
                                  ": non-finite coordinate");
    }
    cloud.positions.push_back(pos);
    if (n == 4) cloud.labels.push_back(parse_label(fields[3], ends[3], path, line_no));
  }
  if (cloud.positions.empty()) {
    throw std::invalid_argument(path + ": no data lines");
  }
  cloud.refresh_bounds();
  return cloud;
}

namespace {

// Shortest decimal that round-trips back to the same double.
void append_double(std::string& out, double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  (void)ec;
  out.append(buf, ptr);
}

}  // namespace

void save_cloud(const PointCloud& cloud, const std::string& path) {
  cloud.validate();
  std::string out;
  out.reserve(cloud.positions.size() * 32);
  for (std::size_t i = 0; i < cloud.positions.size(); ++i) {
    const Vec3& p = cloud.positions[i];
    append_double(out, p.x);
    out.push_back(' ');
    append_double(out, p.y);
    out.push_back(' ');
    append_double(out, p.z);
    if (cloud.has_labels()) {
      out.push_back(' ');
      out += std::to_string(cloud.labels[i]);
    }
    out.push_back('\n');
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write cloud file: " + path);
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!f) throw std::runtime_error("write failed: " + path);
}

PointCloud normalize_cloud(const PointCloud& cloud) {
  if (cloud.size() < 1) throw std::invalid_argument("normalize_cloud: empty cloud");
  Vec3 centroid;
  for (const Vec3& p : cloud.positions) centroid += p;
  centroid = centroid / static_cast<double>(cloud.size());

  double max_r2 = 0.0;
  for (const Vec3& p : cloud.positions) {
    max_r2 = std::max(max_r2, (p - centroid).squared_norm());
  }
  double scale = std::sqrt(max_r2);
  if (scale == 0.0) scale = 1.0;  // all points coincident

  PointCloud out;
  out.positions.reserve(cloud.positions.size());
  for (const Vec3& p : cloud.positions) out.positions.push_back((p - centroid) / scale);
  out.labels = cloud.labels;
  out.attributes = cloud.attributes;
  out.attr_channels = cloud.attr_channels;
  out.refresh_bounds();
  return out;
}

}  // namespace pwc
