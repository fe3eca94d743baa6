// SPDX-License-Identifier: Apache-2.0
//
// Deployment layer: template store, password policies and the two-stage
// verification decision.

#ifndef TOUCHPASS_AUTHSVC_HPP_
#define TOUCHPASS_AUTHSVC_HPP_

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "touchpass/capture.hpp"
#include "touchpass/dtw.hpp"
#include "touchpass/eval.hpp"

namespace touchpass {

struct UserRecord {
  std::string user_id;
  std::map<int, Template> templates;  // digit -> template
  std::int64_t created_at = 0;        // unix seconds
  std::optional<double> threshold_override;

  bool operator==(const UserRecord&) const = default;
};

nlohmann::json RecordToJson(const UserRecord& r);
UserRecord RecordFromJson(const nlohmann::json& j);

// Letters, digits, '.', '_' and '-', at most 64 characters, no leading dot.
bool IsValidUserId(std::string_view id);

// One JSON document per user under `dir`, replaced atomically on write.
class TemplateStore {
 public:
  explicit TemplateStore(std::filesystem::path dir);

  const std::filesystem::path& dir() const { return dir_; }

  std::optional<UserRecord> Load(const std::string& user) const;
  std::vector<std::string> Users() const;

  // Replaces the digit's template with 1..4 new samples.
  UserRecord Enroll(const std::string& user, int digit,
                    std::span<const DigitSample> samples);
  // Adds one sample to the digit's template.
  UserRecord AppendSample(const std::string& user, const DigitSample& sample);
  UserRecord SetThresholdOverride(const std::string& user,
                                  std::optional<double> threshold);

 private:
  std::shared_mutex& LockFor(const std::string& user) const;
  std::filesystem::path PathFor(const std::string& user) const;
  std::optional<UserRecord> Read(const std::string& user) const;
  void Write(const UserRecord& r) const;

  std::filesystem::path dir_;
  mutable std::mutex locks_mutex_;
  mutable std::map<std::string, std::unique_ptr<std::shared_mutex>> locks_;
};

// ---------------------------------------------------------------- policies

enum class PolicyKind { kPin, kOtp };

struct PasswordPolicy {
  PolicyKind kind = PolicyKind::kPin;
  int length = 4;
  std::vector<int> allowed_digits{0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
  bool allow_repetition = true;
  std::optional<std::pair<double, double>> eer_band;  // percent, inclusive

  static PasswordPolicy Pin(int length = 4);
  static PasswordPolicy Otp(int length = 7);

  // Throws InvalidArgument.
  void Validate() const;
};

nlohmann::json PolicyToJson(const PasswordPolicy& p);
// Missing fields take the defaults of the policy kind.
PasswordPolicy PolicyFromJson(const nlohmann::json& j);

// Number of ordered passwords admitted by the policy. `password_eers` is only
// consulted when the policy has an EER band.
std::uint64_t CountCandidates(const PasswordPolicy& policy,
                              std::span<const MultisetEer> password_eers = {});

// Uniform draw from the admitted passwords. Throws EmptyCandidateSet.
std::vector<int> GeneratePassword(
    const PasswordPolicy& policy, std::optional<std::uint64_t> seed,
    std::span<const MultisetEer> password_eers = {});

// Throws InvalidArgument when `password` is not admitted by the policy.
void CheckPassword(const PasswordPolicy& policy, std::span<const int> password,
                   std::span<const MultisetEer> password_eers = {});

// ------------------------------------------------------------ verification

struct VerifyDecision {
  bool stage1_ok = false;
  double stage2_score = 0.0;
  bool accepted = false;
  double threshold_used = 0.0;
  std::vector<double> digit_scores;  // per attempt position
};

// Attempt i is scored against the template of expected[i]; the stage-2 score
// is the mean over positions. `threshold` applies unless the user record
// carries an override.
VerifyDecision Verify(const UserRecord& user, std::span<const int> expected,
                      std::span<const DigitSample> attempt,
                      const PairScorer& scorer, double threshold);

struct ThresholdTarget {
  enum class Kind { kEer, kFar };
  Kind kind = Kind::kEer;
  double far = 0.0;  // fraction, kFar only

  static ThresholdTarget Eer() { return {}; }
  static ThresholdTarget MaxFar(double far) { return {Kind::kFar, far}; }
};

// From the report's DET points. kEer returns the EER threshold, or the
// midpoint to the previous DET threshold when the pools separate perfectly.
// kFar returns the lowest threshold whose FAR does not exceed the target.
double CalibrateThreshold(const EvalReport& report, ThresholdTarget target);

// ------------------------------------------------------------------ config

struct ServiceConfig {
  std::filesystem::path data_dir = "touchpass-data";
  System scorer = System::kDtwAdapted;
  std::optional<double> threshold;
  std::filesystem::path report_file;     // EER table and DET points
  std::filesystem::path selection_file;  // per-digit channel subsets
  std::filesystem::path network_file;    // BLSTM weights
  std::string host = "127.0.0.1";
  int port = 8080;
  int pin_length = 4;
  int otp_length = 7;
  std::vector<int> otp_digits{0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
  bool otp_allow_repetition = false;
  std::optional<std::pair<double, double>> eer_band;
};

// INI keys: data_dir, scorer, threshold, report_file, selection_file,
// network_file, host, port, pin_length, otp_length, otp_digits,
// otp_allow_repetition, eer_band ("lo,hi"). Keys may sit at top level or in
// any section. Environment variables BTP_<KEY> (upper case) override the file.
// An empty path reads only the environment.
ServiceConfig LoadConfig(const std::filesystem::path& path);

}  // namespace touchpass

#endif  // TOUCHPASS_AUTHSVC_HPP_
