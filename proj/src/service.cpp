// SPDX-License-Identifier: Apache-2.0

#include "touchpass/service.hpp"

#include <fstream>

#include "httplib.h"
#include "touchpass/error.hpp"

namespace touchpass {

namespace {

HttpReply Fail(const Error& e) {
  std::string message = e.what();
  const std::string prefix = std::string(ErrorCodeName(e.code())) + ": ";
  if (message.rfind(prefix, 0) == 0) message.erase(0, prefix.size());
  return {HttpStatusFor(e.code()),
          {{"error", ErrorCodeName(e.code())}, {"message", message}}};
}

// Runs a handler, turning every failure into an error reply.
template <typename Fn>
HttpReply Guard(Fn&& fn) {
  try {
    return fn();
  } catch (const Error& e) {
    return Fail(e);
  } catch (const nlohmann::json::exception& e) {
    return Fail(Error(ErrorCode::kInvalidArgument, e.what()));
  } catch (const std::exception& e) {
    return {500, {{"error", "Internal"}, {"message", e.what()}}};
  }
}

nlohmann::json ReadJsonFile(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw Error(ErrorCode::kMissingData, "cannot open " + path.string());
  }
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kMalformedFile, path.string() + ": " + e.what());
  }
}

nlohmann::json UserSummary(const UserRecord& r) {
  nlohmann::json digits = nlohmann::json::object();
  for (const auto& [d, t] : r.templates) {
    digits[std::to_string(d)] = t.enrolment.size();
  }
  return {{"user", r.user_id},
          {"created_at", r.created_at},
          {"digits", std::move(digits)},
          {"threshold_override", r.threshold_override
                                     ? nlohmann::json(*r.threshold_override)
                                     : nlohmann::json(nullptr)}};
}

const std::string& RequireUser(const nlohmann::json& body) {
  if (!body.is_object() || !body.contains("user") || !body["user"].is_string()) {
    throw Error(ErrorCode::kInvalidArgument, "body needs a string 'user'");
  }
  return body["user"].get_ref<const std::string&>();
}

}  // namespace

int HttpStatusFor(ErrorCode code) {
  switch (code) {
    case ErrorCode::kNotEnrolled: return 404;
    case ErrorCode::kStorageFailure:
    case ErrorCode::kScorerUnavailable: return 500;
    default: return 400;
  }
}

AuthService::AuthService(const ServiceConfig& config,
                         std::unique_ptr<PairScorer> scorer, double threshold,
                         std::vector<MultisetEer> password_eers)
    : config_(config),
      store_(config.data_dir),
      scorer_(std::move(scorer)),
      threshold_(threshold),
      password_eers_(std::move(password_eers)) {}

AuthService::AuthService(const ServiceConfig& config)
    : config_(config), store_(config.data_dir) {
  std::optional<EvalReport> report;
  if (!config.report_file.empty()) {
    report = ReportFromJson(ReadJsonFile(config.report_file));
    password_eers_ = report->password_eers;
  }
  switch (config.scorer) {
    case System::kDtwBaseline:
      scorer_ = std::make_unique<DtwScorer>(FunctionSubset::Baseline());
      break;
    case System::kDtwAdapted: {
      if (config.selection_file.empty()) {
        throw Error(ErrorCode::kScorerUnavailable,
                    "dtw-adapted needs a selection_file");
      }
      const FunctionSelection sel =
          SelectionFromJson(ReadJsonFile(config.selection_file));
      scorer_ = std::make_unique<DtwScorer>(sel.subsets);
      break;
    }
    case System::kBlstm:
      if (config.network_file.empty()) {
        throw Error(ErrorCode::kScorerUnavailable, "blstm needs a network_file");
      }
      scorer_ = std::make_unique<BlstmScorer>(LoadNetwork(config.network_file));
      break;
  }
  if (config.threshold) {
    threshold_ = *config.threshold;
  } else if (report) {
    threshold_ = CalibrateThreshold(*report, ThresholdTarget::Eer());
  } else {
    throw Error(ErrorCode::kInvalidArgument,
                "configure a threshold or a report_file");
  }
}

HttpReply AuthService::Enroll(const nlohmann::json& body) {
  return Guard([&]() -> HttpReply {
    const std::string& user = RequireUser(body);
    const int digit = body.at("digit").get<int>();
    if (body.contains("samples")) {
      std::vector<DigitSample> samples;
      int rep = 1;
      for (nlohmann::json s : body.at("samples")) {
        if (!s.contains("digit")) s["digit"] = digit;
        samples.push_back(SampleFromCaptureJson(s, 1, rep++));
      }
      return {200, UserSummary(store_.Enroll(user, digit, samples))};
    }
    const DigitSample sample = SampleFromCaptureJson(body, 1, 1);
    return {200, UserSummary(store_.AppendSample(user, sample))};
  });
}

HttpReply AuthService::Password(const nlohmann::json& body) {
  return Guard([&]() -> HttpReply {
    const std::string& user = RequireUser(body);
    const std::optional<UserRecord> record = store_.Load(user);
    if (!record) throw Error(ErrorCode::kNotEnrolled, "unknown user " + user);

    PasswordPolicy policy;
    const nlohmann::json spec = body.value("policy", nlohmann::json("pin"));
    policy = PolicyFromJson(spec);
    const bool explicit_length = spec.is_object() && spec.contains("length");
    if (policy.kind == PolicyKind::kPin) {
      if (!explicit_length) policy.length = config_.pin_length;
    } else {
      if (!explicit_length) policy.length = config_.otp_length;
      if (!(spec.is_object() && spec.contains("allowed_digits"))) {
        policy.allowed_digits = config_.otp_digits;
      }
      if (!(spec.is_object() && spec.contains("allow_repetition"))) {
        policy.allow_repetition = config_.otp_allow_repetition;
      }
      if (!(spec.is_object() && spec.contains("eer_band"))) {
        policy.eer_band = config_.eer_band;
      }
    }
    // Only digits the user can be verified on.
    std::vector<int> usable;
    for (int d : policy.allowed_digits) {
      if (record->templates.contains(d)) usable.push_back(d);
    }
    policy.allowed_digits = std::move(usable);
    policy.Validate();

    nlohmann::json reply = {{"user", user}, {"policy", PolicyToJson(policy)}};
    if (body.contains("password")) {
      if (policy.kind == PolicyKind::kOtp) {
        throw Error(ErrorCode::kInvalidArgument,
                    "one-time passwords are issued by the server");
      }
      const auto chosen = body["password"].get<std::vector<int>>();
      CheckPassword(policy, chosen, password_eers_);
      reply["password"] = chosen;
      reply["valid"] = true;
      return {200, reply};
    }
    std::optional<std::uint64_t> seed;
    if (body.contains("seed")) seed = body["seed"].get<std::uint64_t>();
    reply["password"] = GeneratePassword(policy, seed, password_eers_);
    reply["candidates"] = CountCandidates(policy, password_eers_);
    return {200, reply};
  });
}

HttpReply AuthService::Verify(const nlohmann::json& body) {
  return Guard([&]() -> HttpReply {
    const std::string& user = RequireUser(body);
    const std::optional<UserRecord> record = store_.Load(user);
    if (!record) throw Error(ErrorCode::kNotEnrolled, "unknown user " + user);
    const auto expected = body.at("expected").get<std::vector<int>>();
    const auto& attempts = body.at("attempts");
    if (!attempts.is_array()) {
      throw Error(ErrorCode::kInvalidArgument, "'attempts' must be an array");
    }
    if (attempts.size() != expected.size()) {
      throw Error(ErrorCode::kLengthMismatch,
                  std::to_string(attempts.size()) + " attempts for a " +
                      std::to_string(expected.size()) + "-digit password");
    }
    std::vector<DigitSample> samples;
    for (std::size_t i = 0; i < attempts.size(); ++i) {
      nlohmann::json capture = attempts[i];
      if (capture.is_array()) {
        capture = {{"digit", expected[i]}, {"points", std::move(capture)}};
      }
      samples.push_back(
          SampleFromCaptureJson(capture, 2, static_cast<int>(i) + 1));
    }
    const VerifyDecision d =
        touchpass::Verify(*record, expected, samples, *scorer_, threshold_);
    return {200,
            {{"user", user},
             {"stage1_ok", d.stage1_ok},
             {"stage2_score", d.stage2_score},
             {"accepted", d.accepted},
             {"threshold_used", d.threshold_used},
             {"digit_scores", d.digit_scores}}};
  });
}

HttpReply AuthService::GetUser(const std::string& id) {
  return Guard([&]() -> HttpReply {
    const std::optional<UserRecord> record = store_.Load(id);
    if (!record) throw Error(ErrorCode::kNotEnrolled, "unknown user " + id);
    return {200, UserSummary(*record)};
  });
}

void AuthService::Mount(httplib::Server& server) {
  auto respond = [](httplib::Response& res, const HttpReply& reply) {
    res.status = reply.status;
    res.set_content(reply.body.dump(), "application/json");
  };
  auto post = [this, respond](HttpReply (AuthService::*handler)(
                                  const nlohmann::json&)) {
    return [this, respond, handler](const httplib::Request& req,
                                          httplib::Response& res) {
      nlohmann::json body;
      try {
        body = nlohmann::json::parse(req.body);
      } catch (const nlohmann::json::exception& e) {
        respond(res, Fail(Error(ErrorCode::kInvalidArgument,
                                std::string("request body: ") + e.what())));
        return;
      }
      respond(res, (this->*handler)(body));
    };
  };
  server.Post("/enroll", post(&AuthService::Enroll));
  server.Post("/password", post(&AuthService::Password));
  server.Post("/verify", post(&AuthService::Verify));
  server.Get(R"(/users/([^/]+))",
             [this, respond](const httplib::Request& req, httplib::Response& res) {
               respond(res, GetUser(req.matches[1]));
             });
}

}  // namespace touchpass
