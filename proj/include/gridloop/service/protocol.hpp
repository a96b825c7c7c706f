/* Control-service wire protocol.
 *
 * Every message is a JSON text preceded by its byte length as a 4-byte
 * big-endian integer. The first client message must be a hello carrying
 * proto_version and the session token.
 *
 * SPDX-License-Identifier: Apache-2.0
 */

#pragma once

#include <gridloop/engine/scenario.hpp>

#include <cstdint>
#include <deque>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace gridloop::service {

using engine::json;

inline constexpr int kProtoVersion = 1;
inline constexpr std::size_t kMaxMessageBytes = 1u << 20;

/// Length prefix plus payload.
std::string frame_message(std::string_view payload);

/// Reassembles messages from a byte stream.
class MessageReader {
public:
  void push(std::span<const char> bytes);
  std::optional<std::string> next();
  /// Set once a length prefix exceeds kMaxMessageBytes; the stream is unusable.
  bool oversized() const { return oversized_; }

private:
  std::deque<char> buffer_;
  bool oversized_ = false;
};

enum class ClientKind { hello, subscribe, command, whatif };

struct ClientMessage {
  ClientKind kind = ClientKind::hello;
  std::string request_id;
  // hello
  int proto_version = 0;
  std::string token;
  // subscribe
  int decimation = 0; // 0: service default
  // command / whatif
  std::string command;
  engine::ScenarioEvent event;
};

struct ParseResult {
  std::optional<ClientMessage> message;
  std::string request_id; // echoed in the reject when parsing fails
  std::string reason;
};

/// Commands accepted on the wire: the scenario event kinds plus the operator
/// commands.
const std::vector<std::string> &command_names();

/// Structural parse. Parameter checks against the scenario happen later, in
/// the engine's event validation.
ParseResult parse_client_message(std::string_view text);

} // namespace gridloop::service
