// SPDX-License-Identifier: Apache-2.0

#include "touchpass/authsvc.hpp"

#include <algorithm>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include "touchpass/error.hpp"

namespace touchpass {

namespace fs = std::filesystem;

namespace {

nlohmann::json MatrixToJson(const FunctionMatrix& m) {
  nlohmann::json channels = nlohmann::json::array();
  for (const auto& c : m.channels()) channels.push_back(c);
  return {{"normalized", m.normalized()}, {"channels", std::move(channels)}};
}

FunctionMatrix MatrixFromJson(const nlohmann::json& j) {
  FunctionMatrix::Channels channels;
  const auto& arr = j.at("channels");
  if (arr.size() != kNumChannels) {
    throw Error(ErrorCode::kMalformedFile, "matrix must have 21 channels");
  }
  for (int c = 0; c < kNumChannels; ++c) {
    channels[c] = arr[c].get<std::vector<double>>();
  }
  return FunctionMatrix(std::move(channels), j.at("normalized").get<bool>());
}

std::int64_t NowSeconds() {
  return std::chrono::duration_cast<std::chrono::seconds>(
             std::chrono::system_clock::now().time_since_epoch())
      .count();
}

void CheckDigit(int digit) {
  if (digit < 0 || digit >= kNumDigits) {
    throw Error(ErrorCode::kInvalidArgument,
                "digit must be within 0..9, got " + std::to_string(digit));
  }
}

void CheckUser(const std::string& user) {
  if (!IsValidUserId(user)) {
    throw Error(ErrorCode::kInvalidArgument, "invalid user id '" + user + "'");
  }
}

}  // namespace

nlohmann::json RecordToJson(const UserRecord& r) {
  nlohmann::json templates = nlohmann::json::object();
  for (const auto& [digit, t] : r.templates) {
    nlohmann::json mats = nlohmann::json::array();
    for (const FunctionMatrix& m : t.enrolment) mats.push_back(MatrixToJson(m));
    templates[std::to_string(digit)] = std::move(mats);
  }
  nlohmann::json j = {{"user", r.user_id},
                      {"created_at", r.created_at},
                      {"templates", std::move(templates)}};
  j["threshold_override"] = r.threshold_override
                                ? nlohmann::json(*r.threshold_override)
                                : nlohmann::json(nullptr);
  return j;
}

UserRecord RecordFromJson(const nlohmann::json& j) {
  UserRecord r;
  try {
    r.user_id = j.at("user").get<std::string>();
    r.created_at = j.at("created_at").get<std::int64_t>();
    if (j.contains("threshold_override") && !j["threshold_override"].is_null()) {
      r.threshold_override = j["threshold_override"].get<double>();
    }
    for (const auto& [key, mats] : j.at("templates").items()) {
      const int digit = std::stoi(key);
      CheckDigit(digit);
      Template t{r.user_id, digit, {}};
      for (const auto& m : mats) t.enrolment.push_back(MatrixFromJson(m));
      if (t.enrolment.empty() || t.enrolment.size() > kMaxEnrolmentSamples) {
        throw Error(ErrorCode::kMalformedFile,
                    "template of digit " + key + " has a bad sample count");
      }
      r.templates.emplace(digit, std::move(t));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kMalformedFile, std::string("user record: ") + e.what());
  } catch (const std::logic_error& e) {
    throw Error(ErrorCode::kMalformedFile, std::string("user record: ") + e.what());
  }
  return r;
}

bool IsValidUserId(std::string_view id) {
  if (id.empty() || id.size() > 64 || id.front() == '.') return false;
  return std::all_of(id.begin(), id.end(), [](char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
           (c >= '0' && c <= '9') || c == '.' || c == '_' || c == '-';
  });
}

// ------------------------------------------------------------------ store

TemplateStore::TemplateStore(fs::path dir) : dir_(std::move(dir)) {
  std::error_code ec;
  fs::create_directories(dir_, ec);
  if (ec) {
    throw Error(ErrorCode::kStorageFailure,
                "cannot create " + dir_.string() + ": " + ec.message());
  }
}

std::shared_mutex& TemplateStore::LockFor(const std::string& user) const {
  std::lock_guard guard(locks_mutex_);
  auto& slot = locks_[user];
  if (!slot) slot = std::make_unique<std::shared_mutex>();
  return *slot;
}

fs::path TemplateStore::PathFor(const std::string& user) const {
  return dir_ / (user + ".json");
}

std::optional<UserRecord> TemplateStore::Read(const std::string& user) const {
  const fs::path path = PathFor(user);
  std::ifstream in(path, std::ios::binary);
  if (!in) return std::nullopt;
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kStorageFailure,
                "corrupt record " + path.string() + ": " + e.what());
  }
  return RecordFromJson(j);
}

void TemplateStore::Write(const UserRecord& r) const {
  const fs::path path = PathFor(r.user_id);
  std::random_device rd;
  const fs::path tmp =
      dir_ / ("." + r.user_id + ".tmp" + std::to_string(rd()));
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out << RecordToJson(r).dump();
    out.flush();
    if (!out) {
      std::error_code ignored;
      fs::remove(tmp, ignored);
      throw Error(ErrorCode::kStorageFailure, "cannot write " + tmp.string());
    }
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw Error(ErrorCode::kStorageFailure,
                "cannot replace " + path.string() + ": " + ec.message());
  }
}

std::optional<UserRecord> TemplateStore::Load(const std::string& user) const {
  CheckUser(user);
  std::shared_lock lock(LockFor(user));
  return Read(user);
}

std::vector<std::string> TemplateStore::Users() const {
  std::vector<std::string> users;
  for (const auto& entry : fs::directory_iterator(dir_)) {
    const std::string name = entry.path().filename().string();
    if (entry.is_regular_file() && entry.path().extension() == ".json" &&
        name.front() != '.') {
      users.push_back(entry.path().stem().string());
    }
  }
  std::sort(users.begin(), users.end());
  return users;
}

UserRecord TemplateStore::Enroll(const std::string& user, int digit,
                                 std::span<const DigitSample> samples) {
  CheckUser(user);
  CheckDigit(digit);
  if (samples.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "enrolment needs a sample");
  }
  if (samples.size() > kMaxEnrolmentSamples) {
    throw Error(ErrorCode::kTooManySamples,
                std::to_string(samples.size()) + " samples, at most 4");
  }
  Template t{user, digit, {}};
  for (const DigitSample& s : samples) {
    if (s.key.digit != digit) {
      throw Error(ErrorCode::kLabelMismatch,
                  "sample labelled " + std::to_string(s.key.digit) +
                      " enrolled under digit " + std::to_string(digit));
    }
    t.enrolment.push_back(ComputeFeatures(s));
  }

  std::unique_lock lock(LockFor(user));
  UserRecord r = Read(user).value_or(UserRecord{user, {}, NowSeconds(), {}});
  r.templates[digit] = std::move(t);
  Write(r);
  return r;
}

UserRecord TemplateStore::AppendSample(const std::string& user,
                                       const DigitSample& sample) {
  CheckUser(user);
  CheckDigit(sample.key.digit);
  FunctionMatrix m = ComputeFeatures(sample);

  std::unique_lock lock(LockFor(user));
  UserRecord r = Read(user).value_or(UserRecord{user, {}, NowSeconds(), {}});
  auto [it, inserted] =
      r.templates.try_emplace(sample.key.digit, Template{user, sample.key.digit, {}});
  if (it->second.enrolment.size() >= kMaxEnrolmentSamples) {
    throw Error(ErrorCode::kTooManySamples,
                "digit " + std::to_string(sample.key.digit) +
                    " already has 4 samples");
  }
  it->second.enrolment.push_back(std::move(m));
  Write(r);
  return r;
}

UserRecord TemplateStore::SetThresholdOverride(const std::string& user,
                                               std::optional<double> threshold) {
  CheckUser(user);
  std::unique_lock lock(LockFor(user));
  std::optional<UserRecord> r = Read(user);
  if (!r) throw Error(ErrorCode::kNotEnrolled, "unknown user " + user);
  r->threshold_override = threshold;
  Write(*r);
  return *r;
}

// --------------------------------------------------------------- policies

PasswordPolicy PasswordPolicy::Pin(int length) {
  PasswordPolicy p;
  p.kind = PolicyKind::kPin;
  p.length = length;
  return p;
}

PasswordPolicy PasswordPolicy::Otp(int length) {
  PasswordPolicy p;
  p.kind = PolicyKind::kOtp;
  p.length = length;
  p.allow_repetition = false;
  return p;
}

void PasswordPolicy::Validate() const {
  if (length < 1 || length > kMaxPasswordLength) {
    throw Error(ErrorCode::kInvalidArgument,
                "password length must be within 1..8");
  }
  if (!std::is_sorted(allowed_digits.begin(), allowed_digits.end()) ||
      std::adjacent_find(allowed_digits.begin(), allowed_digits.end()) !=
          allowed_digits.end()) {
    throw Error(ErrorCode::kInvalidArgument,
                "allowed digits must be sorted and distinct");
  }
  for (int d : allowed_digits) CheckDigit(d);
  if (eer_band && !(eer_band->first <= eer_band->second)) {
    throw Error(ErrorCode::kInvalidArgument, "EER band is empty");
  }
}

nlohmann::json PolicyToJson(const PasswordPolicy& p) {
  nlohmann::json j = {{"kind", p.kind == PolicyKind::kPin ? "pin" : "otp"},
                      {"length", p.length},
                      {"allowed_digits", p.allowed_digits},
                      {"allow_repetition", p.allow_repetition}};
  if (p.eer_band) j["eer_band"] = {p.eer_band->first, p.eer_band->second};
  return j;
}

PasswordPolicy PolicyFromJson(const nlohmann::json& j) {
  try {
    const std::string kind =
        j.is_string() ? j.get<std::string>() : j.value("kind", std::string("pin"));
    PasswordPolicy p;
    if (kind == "pin" || kind == "PIN") {
      p = PasswordPolicy::Pin();
    } else if (kind == "otp" || kind == "OTP") {
      p = PasswordPolicy::Otp();
    } else {
      throw Error(ErrorCode::kInvalidArgument, "unknown policy kind " + kind);
    }
    if (j.is_object()) {
      p.length = j.value("length", p.length);
      if (j.contains("allowed_digits")) {
        p.allowed_digits = j["allowed_digits"].get<std::vector<int>>();
        std::sort(p.allowed_digits.begin(), p.allowed_digits.end());
        p.allowed_digits.erase(
            std::unique(p.allowed_digits.begin(), p.allowed_digits.end()),
            p.allowed_digits.end());
      }
      p.allow_repetition = j.value("allow_repetition", p.allow_repetition);
      if (j.contains("eer_band") && !j["eer_band"].is_null()) {
        const auto& b = j["eer_band"];
        p.eer_band = std::make_pair(b.at(0).get<double>(), b.at(1).get<double>());
      }
    }
    p.Validate();
    return p;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kInvalidArgument, std::string("policy: ") + e.what());
  }
}

namespace {

bool MultisetAdmitted(const PasswordPolicy& p, const DigitCounts& counts) {
  int length = 0;
  for (int d = 0; d < kNumDigits; ++d) {
    if (counts[d] == 0) continue;
    if (!std::binary_search(p.allowed_digits.begin(), p.allowed_digits.end(), d)) {
      return false;
    }
    if (!p.allow_repetition && counts[d] > 1) return false;
    length += counts[d];
  }
  return length == p.length;
}

// Admitted multisets of a banded policy with their ordered counts.
std::vector<std::pair<DigitCounts, std::uint64_t>> BandedMultisets(
    const PasswordPolicy& p, std::span<const MultisetEer> password_eers) {
  if (password_eers.empty()) {
    throw Error(ErrorCode::kMissingData,
                "an EER band needs a report with password EERs");
  }
  std::vector<std::pair<DigitCounts, std::uint64_t>> out;
  for (const MultisetEer& m : password_eers) {
    if (m.eer < p.eer_band->first || m.eer > p.eer_band->second) continue;
    const DigitCounts c = DigitsToCounts(m.digits);
    if (MultisetAdmitted(p, c)) out.emplace_back(c, Arrangements(c));
  }
  return out;
}

std::uint64_t FallingFactorial(std::uint64_t n, int k) {
  std::uint64_t r = 1;
  for (int i = 0; i < k; ++i) r *= n - static_cast<std::uint64_t>(i);
  return r;
}

}  // namespace

std::uint64_t CountCandidates(const PasswordPolicy& policy,
                              std::span<const MultisetEer> password_eers) {
  policy.Validate();
  if (policy.eer_band) {
    std::uint64_t total = 0;
    for (const auto& [c, n] : BandedMultisets(policy, password_eers)) total += n;
    return total;
  }
  const std::uint64_t n = policy.allowed_digits.size();
  if (policy.allow_repetition) {
    std::uint64_t r = 1;
    for (int i = 0; i < policy.length; ++i) r *= n;
    return r;
  }
  if (n < static_cast<std::uint64_t>(policy.length)) return 0;
  return FallingFactorial(n, policy.length);
}

std::vector<int> GeneratePassword(const PasswordPolicy& policy,
                                  std::optional<std::uint64_t> seed,
                                  std::span<const MultisetEer> password_eers) {
  if (CountCandidates(policy, password_eers) == 0) {
    throw Error(ErrorCode::kEmptyCandidateSet,
                "the policy admits no password");
  }
  std::mt19937_64 rng(seed ? *seed : std::random_device{}());
  std::vector<int> password;

  if (policy.eer_band) {
    // A multiset drawn in proportion to its orderings, then a uniform
    // ordering of it, is a uniform ordered password.
    const auto multisets = BandedMultisets(policy, password_eers);
    std::vector<double> weights;
    for (const auto& [c, n] : multisets) weights.push_back(static_cast<double>(n));
    std::discrete_distribution<std::size_t> pick(weights.begin(), weights.end());
    password = CountsToDigits(multisets[pick(rng)].first);
    std::shuffle(password.begin(), password.end(), rng);
    return password;
  }

  const auto& digits = policy.allowed_digits;
  if (policy.allow_repetition) {
    std::uniform_int_distribution<std::size_t> pick(0, digits.size() - 1);
    for (int i = 0; i < policy.length; ++i) password.push_back(digits[pick(rng)]);
    return password;
  }
  std::vector<int> pool = digits;
  for (int i = 0; i < policy.length; ++i) {
    std::uniform_int_distribution<std::size_t> pick(
        static_cast<std::size_t>(i), pool.size() - 1);
    std::swap(pool[static_cast<std::size_t>(i)], pool[pick(rng)]);
  }
  password.assign(pool.begin(), pool.begin() + policy.length);
  return password;
}

void CheckPassword(const PasswordPolicy& policy, std::span<const int> password,
                   std::span<const MultisetEer> password_eers) {
  policy.Validate();
  if (static_cast<int>(password.size()) != policy.length) {
    throw Error(ErrorCode::kInvalidArgument,
                "password must have " + std::to_string(policy.length) +
                    " digits");
  }
  const DigitCounts counts = DigitsToCounts(password);
  if (!MultisetAdmitted(policy, counts)) {
    throw Error(ErrorCode::kInvalidArgument, "password violates the policy");
  }
  if (policy.eer_band) {
    for (const auto& [c, n] : BandedMultisets(policy, password_eers)) {
      if (c == counts) return;
    }
    throw Error(ErrorCode::kInvalidArgument,
                "password lies outside the EER band");
  }
}

// ------------------------------------------------------------ verification

VerifyDecision Verify(const UserRecord& user, std::span<const int> expected,
                      std::span<const DigitSample> attempt,
                      const PairScorer& scorer, double threshold) {
  if (expected.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "empty password");
  }
  if (attempt.size() != expected.size()) {
    throw Error(ErrorCode::kLengthMismatch,
                std::to_string(attempt.size()) + " samples for a " +
                    std::to_string(expected.size()) + "-digit password");
  }
  for (int d : expected) {
    CheckDigit(d);
    if (!user.templates.contains(d)) {
      throw Error(ErrorCode::kNotEnrolled,
                  user.user_id + " has no template for digit " +
                      std::to_string(d));
    }
  }

  VerifyDecision out;
  out.stage1_ok = true;
  for (std::size_t i = 0; i < expected.size(); ++i) {
    if (attempt[i].key.digit != expected[i]) out.stage1_ok = false;
  }
  for (std::size_t i = 0; i < expected.size(); ++i) {
    const FunctionMatrix probe = ComputeFeatures(attempt[i]);
    const Template& t = user.templates.at(expected[i]);
    std::vector<double> scores;
    for (const FunctionMatrix& e : t.enrolment) {
      scores.push_back(scorer.Score(expected[i], e, probe));
    }
    out.digit_scores.push_back(Fuse(scores));
  }
  out.stage2_score = Fuse(out.digit_scores);
  out.threshold_used = user.threshold_override.value_or(threshold);
  out.accepted = out.stage1_ok && out.stage2_score >= out.threshold_used;
  return out;
}

double CalibrateThreshold(const EvalReport& report, ThresholdTarget target) {
  const auto& det = report.det_points;
  if (det.empty()) {
    throw Error(ErrorCode::kMissingData, "report has no DET points");
  }
  if (target.kind == ThresholdTarget::Kind::kFar) {
    for (const DetPoint& p : det) {
      if (p.far <= target.far) return p.threshold;
    }
    throw Error(ErrorCode::kUnreachableTarget,
                "no threshold reaches FAR <= " + std::to_string(target.far));
  }
  std::size_t best = 0;
  double best_gap = std::abs(det[0].far - det[0].frr);
  for (std::size_t i = 1; i < det.size(); ++i) {
    const double gap = std::abs(det[i].far - det[i].frr);
    if (gap < best_gap) {
      best_gap = gap;
      best = i;
    }
  }
  if (det[best].far == 0.0 && det[best].frr == 0.0 && best > 0) {
    return (det[best - 1].threshold + det[best].threshold) / 2.0;
  }
  return det[best].threshold;
}

// ------------------------------------------------------------------ config

namespace {

std::vector<int> ParseDigitList(const std::string& text) {
  std::vector<int> digits;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.find_first_not_of(" \t") == std::string::npos) continue;
    digits.push_back(std::stoi(item));
  }
  std::sort(digits.begin(), digits.end());
  digits.erase(std::unique(digits.begin(), digits.end()), digits.end());
  return digits;
}

bool ParseBool(const std::string& text) {
  if (text == "1" || text == "true" || text == "yes" || text == "on") return true;
  if (text == "0" || text == "false" || text == "no" || text == "off") return false;
  throw Error(ErrorCode::kInvalidArgument, "not a boolean: " + text);
}

}  // namespace

ServiceConfig LoadConfig(const fs::path& path) {
  std::map<std::string, std::string> values;
  if (!path.empty()) {
    boost::property_tree::ptree tree;
    try {
      boost::property_tree::read_ini(path.string(), tree);
    } catch (const boost::property_tree::ini_parser_error& e) {
      throw Error(ErrorCode::kMalformedFile, e.what());
    }
    for (const auto& [key, node] : tree) {
      if (node.empty()) {
        values[key] = node.data();
      } else {
        for (const auto& [sub, leaf] : node) values[sub] = leaf.data();
      }
    }
  }
  static const char* const kKeys[] = {
      "data_dir",     "scorer",     "threshold",  "report_file",
      "selection_file", "network_file", "host",   "port",
      "pin_length",   "otp_length", "otp_digits", "otp_allow_repetition",
      "eer_band"};
  for (const char* key : kKeys) {
    std::string env = "BTP_";
    for (const char* c = key; *c; ++c) {
      env += static_cast<char>(std::toupper(static_cast<unsigned char>(*c)));
    }
    if (const char* v = std::getenv(env.c_str())) values[key] = v;
  }
  for (const auto& [key, v] : values) {
    if (std::find_if(std::begin(kKeys), std::end(kKeys), [&](const char* k) {
          return key == k;
        }) == std::end(kKeys)) {
      throw Error(ErrorCode::kInvalidArgument, "unknown config key " + key);
    }
  }

  ServiceConfig c;
  auto get = [&](const char* key) -> const std::string* {
    auto it = values.find(key);
    return it == values.end() ? nullptr : &it->second;
  };
  try {
    if (auto v = get("data_dir")) c.data_dir = *v;
    if (auto v = get("scorer")) c.scorer = ParseSystem(*v);
    if (auto v = get("threshold"); v && !v->empty()) c.threshold = std::stod(*v);
    if (auto v = get("report_file")) c.report_file = *v;
    if (auto v = get("selection_file")) c.selection_file = *v;
    if (auto v = get("network_file")) c.network_file = *v;
    if (auto v = get("host")) c.host = *v;
    if (auto v = get("port")) c.port = std::stoi(*v);
    if (auto v = get("pin_length")) c.pin_length = std::stoi(*v);
    if (auto v = get("otp_length")) c.otp_length = std::stoi(*v);
    if (auto v = get("otp_digits")) c.otp_digits = ParseDigitList(*v);
    if (auto v = get("otp_allow_repetition")) c.otp_allow_repetition = ParseBool(*v);
    if (auto v = get("eer_band"); v && !v->empty()) {
      const auto comma = v->find(',');
      if (comma == std::string::npos) {
        throw Error(ErrorCode::kInvalidArgument, "eer_band must be 'lo,hi'");
      }
      c.eer_band = std::make_pair(std::stod(v->substr(0, comma)),
                                  std::stod(v->substr(comma + 1)));
    }
  } catch (const std::logic_error& e) {
    throw Error(ErrorCode::kInvalidArgument,
                std::string("config value: ") + e.what());
  }
  return c;
}

}  // namespace touchpass
