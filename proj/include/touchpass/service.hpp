// SPDX-License-Identifier: Apache-2.0
//
// JSON-over-HTTP front end of the template store.
//
//   POST /enroll    {user, digit, points[]}           append one sample
//                   {user, digit, samples[{points}]}  replace the template
//   POST /password  {user, policy, seed?, password?}
//   POST /verify    {user, expected[], attempts[]}
//   GET  /users/{id}
//
// An attempt is a capture object {digit, points[]} or a bare points array,
// which is taken to carry the expected label. Failures answer
// {"error": <code name>, "message": ...}.

#ifndef TOUCHPASS_SERVICE_HPP_
#define TOUCHPASS_SERVICE_HPP_

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "touchpass/authsvc.hpp"
#include "touchpass/error.hpp"
#include "touchpass/eval.hpp"

namespace httplib {
class Server;
}

namespace touchpass {

struct HttpReply {
  int status = 200;
  nlohmann::json body;
};

class AuthService {
 public:
  // Loads the selection, network and report files named by the config. The
  // global threshold is config.threshold, else the report's EER threshold.
  explicit AuthService(const ServiceConfig& config);
  AuthService(const ServiceConfig& config, std::unique_ptr<PairScorer> scorer,
              double threshold, std::vector<MultisetEer> password_eers = {});

  double threshold() const { return threshold_; }
  TemplateStore& store() { return store_; }

  HttpReply Enroll(const nlohmann::json& body);
  HttpReply Password(const nlohmann::json& body);
  HttpReply Verify(const nlohmann::json& body);
  HttpReply GetUser(const std::string& id);

  // Registers the routes on `server`.
  void Mount(httplib::Server& server);

 private:
  ServiceConfig config_;
  TemplateStore store_;
  std::unique_ptr<PairScorer> scorer_;
  double threshold_ = 0.0;
  std::vector<MultisetEer> password_eers_;
};

// Maps an error code to an HTTP status.
int HttpStatusFor(ErrorCode code);

}  // namespace touchpass

#endif  // TOUCHPASS_SERVICE_HPP_
