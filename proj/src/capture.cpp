// SPDX-License-Identifier: Apache-2.0

#include "touchpass/capture.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <regex>
#include <set>
#include <sstream>
#include <system_error>

#include "touchpass/error.hpp"

namespace touchpass {

namespace {

void ValidateKey(const SampleKey& key) {
  if (key.digit < 0 || key.digit > 9) {
    throw Error(ErrorCode::kInvalidArgument,
                "digit out of range: " + std::to_string(key.digit));
  }
  if (key.session < 1 || key.session > 2) {
    throw Error(ErrorCode::kInvalidArgument,
                "session out of range: " + std::to_string(key.session));
  }
  if (key.repetition < 1) {
    throw Error(ErrorCode::kInvalidArgument,
                "repetition out of range: " + std::to_string(key.repetition));
  }
}

std::vector<std::string_view> SplitFields(std::string_view line,
                                          std::string_view separators) {
  std::vector<std::string_view> fields;
  std::size_t pos = 0;
  while (pos < line.size()) {
    pos = line.find_first_not_of(separators, pos);
    if (pos == std::string_view::npos) break;
    std::size_t end = line.find_first_of(separators, pos);
    if (end == std::string_view::npos) end = line.size();
    fields.push_back(line.substr(pos, end - pos));
    pos = end;
  }
  return fields;
}

double ParseDouble(std::string_view field, std::size_t line_no) {
  double value = 0.0;
  auto [ptr, ec] =
      std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc() || ptr != field.data() + field.size() ||
      !std::isfinite(value)) {
    throw Error(ErrorCode::kMalformedFile,
                "line " + std::to_string(line_no) + ": bad number '" +
                    std::string(field) + "'");
  }
  return value;
}

std::string FormatDouble(double value) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, ptr);
}

}  // namespace

std::string ToString(const SampleKey& key) {
  return key.user_id + "/digit" + std::to_string(key.digit) + "/s" +
         std::to_string(key.session) + "/r" + std::to_string(key.repetition);
}

DigitSample MakeSample(SampleKey key, std::vector<TouchPoint> points,
                       std::size_t min_points) {
  ValidateKey(key);
  std::vector<TouchPoint> kept;
  kept.reserve(points.size());
  for (const TouchPoint& p : points) {
    if (!std::isfinite(p.x) || !std::isfinite(p.y) || !std::isfinite(p.t)) {
      throw Error(ErrorCode::kMalformedFile,
                  ToString(key) + ": non-finite coordinate");
    }
    if (!kept.empty()) {
      if (p.t < kept.back().t) {
        throw Error(ErrorCode::kNonMonotonicTime,
                    ToString(key) + ": timestamp decreases at point " +
                        std::to_string(kept.size()));
      }
      if (p.t == kept.back().t) continue;
    }
    kept.push_back(p);
  }
  if (kept.size() < min_points) {
    throw Error(ErrorCode::kTooShort,
                ToString(key) + ": " + std::to_string(kept.size()) +
                    " points, need " + std::to_string(min_points));
  }
  return DigitSample{std::move(key), std::move(kept)};
}

DigitSample LoadSample(std::string_view content, const SampleKey& meta,
                       const LoaderOptions& options) {
  const int needed_columns =
      std::max({options.x_column, options.y_column, options.t_column}) + 1;
  std::vector<TouchPoint> points;
  long long declared = -1;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= content.size()) {
    std::size_t end = content.find('\n', pos);
    if (end == std::string_view::npos) end = content.size();
    std::string_view line = content.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    auto fields = SplitFields(line, options.separators);
    if (fields.empty()) continue;

    if (options.count_header && declared < 0) {
      if (fields.size() != 1) {
        throw Error(ErrorCode::kMalformedFile, "header must be a point count");
      }
      auto [ptr, ec] = std::from_chars(
          fields[0].data(), fields[0].data() + fields[0].size(), declared);
      if (ec != std::errc() || ptr != fields[0].data() + fields[0].size() ||
          declared < 0) {
        throw Error(ErrorCode::kMalformedFile,
                    "bad point count '" + std::string(fields[0]) + "'");
      }
      continue;
    }
    if (static_cast<int>(fields.size()) < needed_columns) {
      throw Error(ErrorCode::kMalformedFile,
                  "line " + std::to_string(line_no) + ": expected " +
                      std::to_string(needed_columns) + " fields");
    }
    points.push_back({ParseDouble(fields[options.x_column], line_no),
                      ParseDouble(fields[options.y_column], line_no),
                      ParseDouble(fields[options.t_column], line_no)});
  }
  if (options.count_header) {
    if (declared < 0) {
      throw Error(ErrorCode::kMalformedFile, "missing point count header");
    }
    if (static_cast<std::size_t>(declared) != points.size()) {
      throw Error(ErrorCode::kMalformedFile,
                  "header declares " + std::to_string(declared) +
                      " points, found " + std::to_string(points.size()));
    }
  }
  return MakeSample(meta, std::move(points), options.min_points);
}

std::string SerializeSample(const DigitSample& sample) {
  std::string out = std::to_string(sample.points.size()) + "\n";
  for (const TouchPoint& p : sample.points) {
    out += FormatDouble(p.x);
    out += ' ';
    out += FormatDouble(p.y);
    out += ' ';
    out += FormatDouble(p.t);
    out += '\n';
  }
  return out;
}

bool ParseSampleFileName(std::string_view file_name, SampleKey* key) {
  static const std::regex kPattern(R"(^(.+)_(\d)_s(\d+)_r(\d+)\.txt$)");
  std::cmatch m;
  if (!std::regex_match(file_name.begin(), file_name.end(), m, kPattern)) {
    return false;
  }
  key->user_id = m[1].str();
  key->digit = std::stoi(m[2].str());
  key->session = std::stoi(m[3].str());
  key->repetition = std::stoi(m[4].str());
  return true;
}

std::string SampleFileName(const SampleKey& key) {
  return key.user_id + "_" + std::to_string(key.digit) + "_s" +
         std::to_string(key.session) + "_r" + std::to_string(key.repetition) +
         ".txt";
}

Dataset::Dataset(std::vector<DigitSample> samples, std::size_t dev_users)
    : samples_(std::move(samples)) {
  std::sort(samples_.begin(), samples_.end(),
            [](const DigitSample& a, const DigitSample& b) {
              return a.key < b.key;
            });
  std::set<std::string> users;
  for (std::size_t i = 0; i < samples_.size(); ++i) {
    if (!index_.emplace(samples_[i].key, i).second) {
      throw Error(ErrorCode::kDuplicateKey, ToString(samples_[i].key));
    }
    users.insert(samples_[i].key.user_id);
  }
  users_.assign(users.begin(), users.end());
  dev_users_ = std::min(dev_users, users_.size());
}

std::vector<std::string> Dataset::users(Split split) const {
  switch (split) {
    case Split::kDevelopment:
      return {users_.begin(), users_.begin() + dev_users_};
    case Split::kEvaluation:
      return {users_.begin() + dev_users_, users_.end()};
    case Split::kAll:
      break;
  }
  return users_;
}

const DigitSample* Dataset::Find(const SampleKey& key) const {
  auto it = index_.find(key);
  return it == index_.end() ? nullptr : &samples_[it->second];
}

const DigitSample* Dataset::Find(const std::string& user, int digit,
                                 int session, int repetition) const {
  return Find(SampleKey{user, digit, session, repetition});
}

Dataset Dataset::Restrict(std::span<const std::string> users,
                          std::size_t dev_users) const {
  std::set<std::string> keep(users.begin(), users.end());
  std::vector<DigitSample> subset;
  for (const DigitSample& s : samples_) {
    if (keep.count(s.key.user_id)) subset.push_back(s);
  }
  return Dataset(std::move(subset), dev_users);
}

DatasetLoad LoadDataset(const std::filesystem::path& root,
                        const LoaderOptions& options, std::size_t dev_users) {
  namespace fs = std::filesystem;
  std::error_code ec;
  if (!fs::is_directory(root, ec)) {
    throw Error(ErrorCode::kEmptyDataset,
                "not a directory: " + root.string());
  }
  std::vector<fs::path> files;
  for (const auto& user_dir : fs::directory_iterator(root)) {
    if (!user_dir.is_directory()) continue;
    for (const auto& entry : fs::directory_iterator(user_dir.path())) {
      if (entry.is_regular_file()) files.push_back(entry.path());
    }
  }
  std::sort(files.begin(), files.end());

  DatasetLoad load;
  std::vector<DigitSample> samples;
  std::set<SampleKey> seen;
  for (const fs::path& file : files) {
    SampleKey key;
    if (!ParseSampleFileName(file.filename().string(), &key)) {
      load.skipped.push_back(file.string() + ": unrecognized file name");
      continue;
    }
    if (!seen.insert(key).second) {
      throw Error(ErrorCode::kDuplicateKey,
                  ToString(key) + " (" + file.string() + ")");
    }
    std::ifstream in(file, std::ios::binary);
    std::stringstream buf;
    buf << in.rdbuf();
    try {
      samples.push_back(LoadSample(buf.str(), key, options));
    } catch (const Error& e) {
      load.skipped.push_back(file.string() + ": " + e.what());
    }
  }
  if (samples.empty()) {
    throw Error(ErrorCode::kEmptyDataset, "no samples under " + root.string());
  }
  load.dataset = Dataset(std::move(samples), dev_users);
  return load;
}

void WriteDataset(const Dataset& dataset, const std::filesystem::path& root) {
  namespace fs = std::filesystem;
  for (const DigitSample& s : dataset.samples()) {
    fs::path dir = root / s.key.user_id;
    fs::create_directories(dir);
    std::ofstream out(dir / SampleFileName(s.key), std::ios::binary);
    out << SerializeSample(s);
    if (!out) {
      throw Error(ErrorCode::kStorageFailure,
                  "cannot write " + (dir / SampleFileName(s.key)).string());
    }
  }
}

namespace {

// Subtracts the mean until the residual mean is negligible relative to the
// data scale. The stopping test depends only on the data, so feeding the
// output back in stops immediately and leaves it untouched.
void CenterInPlace(std::vector<TouchPoint>& points, double TouchPoint::*field) {
  const double n = static_cast<double>(points.size());
  for (int iter = 0; iter < 16; ++iter) {
    double sum = 0.0, comp = 0.0, scale = 0.0;
    for (const TouchPoint& p : points) {
      // Kahan summation keeps the residual mean close to zero.
      double y = p.*field - comp;
      double t = sum + y;
      comp = (t - sum) - y;
      sum = t;
      scale = std::max(scale, std::abs(p.*field));
    }
    double mean = sum / n;
    if (std::abs(mean) <= 1e-12 * scale || mean == 0.0) return;
    for (TouchPoint& p : points) p.*field -= mean;
  }
}

}  // namespace

DigitSample Preprocess(const DigitSample& sample) {
  DigitSample out = sample;
  if (out.points.empty()) return out;
  CenterInPlace(out.points, &TouchPoint::x);
  CenterInPlace(out.points, &TouchPoint::y);
  const double t0 = out.points.front().t;
  if (t0 != 0.0) {
    for (TouchPoint& p : out.points) p.t -= t0;
  }
  return out;
}

DigitSample SampleFromCaptureJson(const nlohmann::json& capture, int session,
                                  int repetition) {
  try {
    SampleKey key;
    if (capture.contains("user")) key.user_id = capture.at("user").get<std::string>();
    key.digit = capture.at("digit").get<int>();
    key.session = session;
    key.repetition = repetition;
    std::vector<TouchPoint> points;
    for (const auto& p : capture.at("points")) {
      points.push_back({p.at("x").get<double>(), p.at("y").get<double>(),
                        p.at("t").get<double>()});
    }
    return MakeSample(std::move(key), std::move(points));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kMalformedFile,
                std::string("capture JSON: ") + e.what());
  }
}

nlohmann::json SampleToCaptureJson(const DigitSample& sample) {
  nlohmann::json points = nlohmann::json::array();
  for (const TouchPoint& p : sample.points) {
    points.push_back({{"x", p.x}, {"y", p.y}, {"t", p.t}});
  }
  return {{"user", sample.key.user_id},
          {"digit", sample.key.digit},
          {"points", std::move(points)}};
}

}  // namespace touchpass
