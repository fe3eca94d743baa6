// SPDX-License-Identifier: Apache-2.0

#include <boost/math/distributions/chi_squared.hpp>
#include <cstdlib>
#include <fstream>
#include <map>
#include <thread>

#include "doctest.h"
#include "helpers.hpp"
#include "touchpass/authsvc.hpp"

using namespace touchpass;
using tptest::CodeOf;

namespace {

std::vector<DigitSample> Samples(std::mt19937_64& rng, int digit, int n) {
  std::vector<DigitSample> out;
  for (int i = 0; i < n; ++i) out.push_back(tptest::RandomSample(rng, 12 + i, digit));
  return out;
}

EvalReport ReportWithDet(std::vector<DetPoint> det) {
  EvalReport r;
  r.det_points = std::move(det);
  return r;
}

class EnvVar {
 public:
  EnvVar(const char* name, const char* value) : name_(name) {
    ::setenv(name, value, 1);
  }
  ~EnvVar() { ::unsetenv(name_); }

 private:
  const char* name_;
};

}  // namespace

TEST_SUITE("authsvc") {
  TEST_CASE("user ids") {
    CHECK(IsValidUserId("alice"));
    CHECK(IsValidUserId("a.b-c_9"));
    CHECK_FALSE(IsValidUserId(""));
    CHECK_FALSE(IsValidUserId(".hidden"));
    CHECK_FALSE(IsValidUserId("../etc"));
    CHECK_FALSE(IsValidUserId("a/b"));
    CHECK_FALSE(IsValidUserId(std::string(65, 'a')));
  }

  TEST_CASE("enrolment stores one matrix per sample") {
    tptest::TempDir dir("store");
    TemplateStore store(dir.path());
    std::mt19937_64 rng(81);
    for (int d = 0; d < 10; ++d) store.Enroll("alice", d, Samples(rng, d, 3));
    const UserRecord r = *store.Load("alice");
    CHECK(r.templates.size() == 10);
    std::size_t matrices = 0;
    for (const auto& [d, t] : r.templates) {
      CHECK(t.digit == d);
      matrices += t.enrolment.size();
      for (const auto& m : t.enrolment) CHECK(m.normalized());
    }
    CHECK(matrices == 30);
    CHECK(store.Users() == std::vector<std::string>{"alice"});
    CHECK_FALSE(store.Load("bob").has_value());
  }

  TEST_CASE("enrolment errors") {
    tptest::TempDir dir("store-errors");
    TemplateStore store(dir.path());
    std::mt19937_64 rng(82);
    CHECK(CodeOf([&] { store.Enroll("u", 1, Samples(rng, 1, 5)); }) ==
          ErrorCode::kTooManySamples);
    CHECK(CodeOf([&] { store.Enroll("u", 1, Samples(rng, 2, 1)); }) ==
          ErrorCode::kLabelMismatch);
    CHECK(CodeOf([&] { store.Enroll("u", 1, {}); }) == ErrorCode::kInvalidArgument);
    CHECK(CodeOf([&] { store.Enroll("../x", 1, Samples(rng, 1, 1)); }) ==
          ErrorCode::kInvalidArgument);
    CHECK(CodeOf([&] { store.Enroll("u", 10, Samples(rng, 10, 1)); }) ==
          ErrorCode::kInvalidArgument);

    for (const DigitSample& s : Samples(rng, 4, 4)) store.AppendSample("u", s);
    CHECK(store.Load("u")->templates.at(4).enrolment.size() == 4);
    CHECK(CodeOf([&] { store.AppendSample("u", Samples(rng, 4, 1)[0]); }) ==
          ErrorCode::kTooManySamples);
    CHECK(CodeOf([&] { store.SetThresholdOverride("nobody", 0.5); }) ==
          ErrorCode::kNotEnrolled);
  }

  TEST_CASE("records persist bit for bit") {
    tptest::TempDir dir("persist");
    std::mt19937_64 rng(83);
    UserRecord written;
    {
      TemplateStore store(dir.path());
      store.Enroll("carol", 3, Samples(rng, 3, 4));
      written = store.SetThresholdOverride("carol", 0.123456789012345678);
    }
    TemplateStore reopened(dir.path());
    const UserRecord read = *reopened.Load("carol");
    CHECK(read == written);
    CHECK(read.threshold_override == 0.123456789012345678);
    CHECK(RecordFromJson(nlohmann::json::parse(RecordToJson(read).dump())) == read);

    // No temporary files left behind.
    int files = 0;
    for (const auto& e : std::filesystem::directory_iterator(dir.path())) {
      (void)e;
      ++files;
    }
    CHECK(files == 1);
  }

  TEST_CASE("re-enrolment replaces one digit only") {
    tptest::TempDir dir("reenrol");
    TemplateStore store(dir.path());
    std::mt19937_64 rng(84);
    store.Enroll("dave", 1, Samples(rng, 1, 2));
    store.Enroll("dave", 2, Samples(rng, 2, 2));
    const UserRecord before = *store.Load("dave");
    store.Enroll("dave", 1, Samples(rng, 1, 3));
    const UserRecord after = *store.Load("dave");
    CHECK(after.templates.at(2) == before.templates.at(2));
    CHECK(after.templates.at(1).enrolment.size() == 3);
    CHECK(after.created_at == before.created_at);
  }

  TEST_CASE("concurrent appends to different digits all land") {
    tptest::TempDir dir("concurrent");
    TemplateStore store(dir.path());
    std::vector<std::thread> threads;
    for (int d = 0; d < 8; ++d) {
      threads.emplace_back([&store, d] {
        std::mt19937_64 rng(900 + d);
        for (int k = 0; k < 3; ++k) {
          store.AppendSample("erin", tptest::RandomSample(rng, 10, d));
        }
      });
    }
    for (auto& t : threads) t.join();
    const UserRecord r = *store.Load("erin");
    CHECK(r.templates.size() == 8);
    for (const auto& [d, t] : r.templates) CHECK(t.enrolment.size() == 3);
  }

  TEST_CASE("policy candidate counts") {
    CHECK(CountCandidates(PasswordPolicy::Pin()) == 10000);
    CHECK(CountCandidates(PasswordPolicy::Otp()) == 604800);
    PasswordPolicy p = PasswordPolicy::Otp(7);
    p.allow_repetition = false;
    p.allowed_digits = {0, 1, 2, 3, 4, 5, 6};
    CHECK(CountCandidates(p) == 5040);
    p.allowed_digits = {1, 2};
    CHECK(CountCandidates(p) == 0);
    CHECK(CodeOf([&] { GeneratePassword(p, 1); }) == ErrorCode::kEmptyCandidateSet);

    PasswordPolicy bad = PasswordPolicy::Pin(9);
    CHECK(CodeOf([&] { bad.Validate(); }) == ErrorCode::kInvalidArgument);
    bad = PasswordPolicy::Pin();
    bad.allowed_digits = {3, 3};
    CHECK(CodeOf([&] { bad.Validate(); }) == ErrorCode::kInvalidArgument);
  }

  TEST_CASE("policy JSON") {
    PasswordPolicy p = PasswordPolicy::Otp(6);
    p.eer_band = std::pair{0.5, 2.5};
    const PasswordPolicy back = PolicyFromJson(PolicyToJson(p));
    CHECK(back.kind == PolicyKind::kOtp);
    CHECK(back.length == 6);
    CHECK(back.eer_band == p.eer_band);
    CHECK(PolicyFromJson("pin").length == 4);
    CHECK(PolicyFromJson("otp").length == 7);
    CHECK(CodeOf([] { PolicyFromJson("sms"); }) == ErrorCode::kInvalidArgument);
  }

  TEST_CASE("EER band restricts the candidates") {
    const std::vector<MultisetEer> table{
        {{1, 2}, 1.0}, {{3, 3}, 2.0}, {{4, 5}, 5.0}, {{0, 9}, 2.5}};
    PasswordPolicy p = PasswordPolicy::Pin(2);
    p.eer_band = std::pair{0.0, 2.0};
    CHECK(CountCandidates(p, table) == 3);
    CHECK(CodeOf([&] { CountCandidates(p, {}); }) == ErrorCode::kMissingData);
    std::map<std::vector<int>, int> seen;
    for (std::uint64_t s = 0; s < 3000; ++s) ++seen[GeneratePassword(p, s, table)];
    CHECK(seen.size() == 3);
    CHECK(seen.contains({2, 1}));
    CHECK(seen.contains({3, 3}));
    for (const auto& [pw, n] : seen) CHECK(std::abs(n - 1000) < 120);

    CheckPassword(p, std::vector<int>{2, 1}, table);
    CHECK(CodeOf([&] { CheckPassword(p, std::vector<int>{4, 5}, table); }) ==
          ErrorCode::kInvalidArgument);
    p.eer_band = std::pair{10.0, 20.0};
    CHECK(CodeOf([&] { GeneratePassword(p, 1, table); }) ==
          ErrorCode::kEmptyCandidateSet);
  }

  TEST_CASE("generation is seeded and respects the policy") {
    PasswordPolicy otp = PasswordPolicy::Otp();
    CHECK(GeneratePassword(otp, 42) == GeneratePassword(otp, 42));
    for (std::uint64_t s = 0; s < 500; ++s) {
      const auto pw = GeneratePassword(otp, s);
      CHECK(pw.size() == 7);
      std::vector<int> sorted = pw;
      std::sort(sorted.begin(), sorted.end());
      CHECK(std::adjacent_find(sorted.begin(), sorted.end()) == sorted.end());
      CheckPassword(otp, pw);
    }
    CHECK(CodeOf([&] { CheckPassword(otp, std::vector<int>{1, 1, 2, 3, 4, 5, 6}); }) ==
          ErrorCode::kInvalidArgument);
  }

  TEST_CASE("generation is uniform over the admitted passwords") {
    PasswordPolicy p = PasswordPolicy::Pin(4);
    p.allowed_digits = {1, 2, 3, 4};
    p.allow_repetition = false;
    REQUIRE(CountCandidates(p) == 24);
    std::map<std::vector<int>, int> counts;
    constexpr int kDraws = 100000;
    for (int s = 0; s < kDraws; ++s) ++counts[GeneratePassword(p, s)];
    REQUIRE(counts.size() == 24);
    const double expected = kDraws / 24.0;
    double chi2 = 0.0;
    for (const auto& [pw, n] : counts) chi2 += (n - expected) * (n - expected) / expected;
    const boost::math::chi_squared dist(23);
    const double p_value = boost::math::cdf(boost::math::complement(dist, chi2));
    CHECK(p_value > 0.01);
  }

  TEST_CASE("verification") {
    std::mt19937_64 rng(85);
    UserRecord user{"frank", {}, 0, {}};
    std::map<int, std::vector<DigitSample>> enrolled;
    for (int d : {1, 2, 3}) {
      enrolled[d] = Samples(rng, d, 2);
      Template t{"frank", d, {}};
      for (const auto& s : enrolled[d]) t.enrolment.push_back(ComputeFeatures(s));
      user.templates[d] = t;
    }
    const DtwScorer scorer(FunctionSubset::Baseline());

    SUBCASE("identical drawings score one") {
      Template single{"frank", 2, {ComputeFeatures(enrolled[2][0])}};
      UserRecord u = user;
      u.templates[2] = single;
      const std::vector<int> expected{2};
      const std::vector<DigitSample> attempt{enrolled[2][0]};
      const VerifyDecision v = Verify(u, expected, attempt, scorer, 0.99);
      CHECK(v.stage1_ok);
      CHECK(v.stage2_score == 1.0);
      CHECK(v.accepted);
      CHECK(v.threshold_used == 0.99);
    }

    SUBCASE("wrong digit label never passes") {
      const std::vector<int> expected{1, 2};
      for (int trial = 0; trial < 20; ++trial) {
        std::vector<DigitSample> attempt{enrolled[1][0], enrolled[2][trial % 2]};
        attempt[trial % 2].key.digit = 3;
        const VerifyDecision v = Verify(user, expected, attempt, scorer, 0.0);
        CHECK_FALSE(v.stage1_ok);
        CHECK_FALSE(v.accepted);
      }
    }

    SUBCASE("scores and override") {
      const std::vector<int> expected{3, 1};
      const std::vector<DigitSample> attempt{enrolled[3][1], enrolled[1][0]};
      VerifyDecision v = Verify(user, expected, attempt, scorer, 0.5);
      REQUIRE(v.digit_scores.size() == 2);
      const double d3 = (DtwMatch(user.templates[3].enrolment[0],
                                  ComputeFeatures(attempt[0]),
                                  FunctionSubset::Baseline()).score +
                         1.0) /
                        2.0;
      CHECK(v.digit_scores[0] == doctest::Approx(d3));
      CHECK(v.stage2_score == doctest::Approx((v.digit_scores[0] + v.digit_scores[1]) / 2));
      CHECK(v.accepted == (v.stage2_score >= 0.5));

      UserRecord strict = user;
      strict.threshold_override = 1.1;
      v = Verify(strict, expected, attempt, scorer, 0.0);
      CHECK(v.threshold_used == 1.1);
      CHECK_FALSE(v.accepted);
    }

    SUBCASE("errors") {
      const std::vector<int> two{1, 2};
      const std::vector<DigitSample> one{enrolled[1][0]};
      CHECK(CodeOf([&] { Verify(user, two, one, scorer, 0.5); }) ==
            ErrorCode::kLengthMismatch);
      const std::vector<int> missing{7};
      CHECK(CodeOf([&] { Verify(user, missing, one, scorer, 0.5); }) ==
            ErrorCode::kNotEnrolled);
    }
  }

  TEST_CASE("threshold calibration") {
    const EvalReport overlap = ReportWithDet(
        {{0.1, 1.0, 0.0}, {0.4, 0.5, 0.25}, {0.6, 0.25, 0.5}, {0.9, 0.0, 1.0}});
    CHECK(CalibrateThreshold(overlap, ThresholdTarget::Eer()) == 0.4);
    CHECK(CalibrateThreshold(overlap, ThresholdTarget::MaxFar(0.3)) == 0.6);
    CHECK(CalibrateThreshold(overlap, ThresholdTarget::MaxFar(0.0)) == 0.9);

    const EvalReport separated =
        ReportWithDet({{0.2, 1.0, 0.0}, {0.4, 0.5, 0.0}, {0.8, 0.0, 0.0}, {0.9, 0.0, 0.5}});
    CHECK(CalibrateThreshold(separated, ThresholdTarget::Eer()) == doctest::Approx(0.6));

    const EvalReport never = ReportWithDet({{0.5, 0.5, 0.0}});
    CHECK(CodeOf([&] { CalibrateThreshold(never, ThresholdTarget::MaxFar(0.1)); }) ==
          ErrorCode::kUnreachableTarget);
    CHECK(CodeOf([] { CalibrateThreshold(EvalReport{}, ThresholdTarget::Eer()); }) ==
          ErrorCode::kMissingData);
  }

  TEST_CASE("configuration file and environment") {
    tptest::TempDir dir("config");
    const auto path = dir.path() / "service.ini";
    std::ofstream(path) << "data_dir = /tmp/tp\nscorer = dtw-baseline\n"
                           "[server]\nport = 9000\nhost = 0.0.0.0\n"
                           "[passwords]\notp_digits = 1,2,3,4,5,6,7,8\n"
                           "eer_band = 0.5, 3\n";
    ServiceConfig c = LoadConfig(path);
    CHECK(c.data_dir == "/tmp/tp");
    CHECK(c.scorer == System::kDtwBaseline);
    CHECK(c.port == 9000);
    CHECK(c.host == "0.0.0.0");
    CHECK(c.otp_digits.size() == 8);
    REQUIRE(c.eer_band.has_value());
    CHECK(c.eer_band->second == 3.0);
    CHECK_FALSE(c.threshold.has_value());

    {
      EnvVar port("BTP_PORT", "9100");
      EnvVar thr("BTP_THRESHOLD", "0.75");
      c = LoadConfig(path);
      CHECK(c.port == 9100);
      CHECK(c.threshold == 0.75);
    }

    std::ofstream(path) << "colour = blue\n";
    CHECK(CodeOf([&] { LoadConfig(path); }) == ErrorCode::kInvalidArgument);
    std::ofstream(path) << "port = many\n";
    CHECK(CodeOf([&] { LoadConfig(path); }) == ErrorCode::kInvalidArgument);
    CHECK(LoadConfig({}).port == 8080);
  }
}
