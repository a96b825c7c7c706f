/* SPDX-License-Identifier: Apache-2.0 */

#include <gridloop/service/protocol.hpp>

#include <algorithm>

#include <fmt/format.h>

namespace gridloop::service {

std::string frame_message(std::string_view payload) {
  if (payload.size() > kMaxMessageBytes)
    throw DomainError(fmt::format("message of {} bytes exceeds the {} byte limit", payload.size(),
                                  kMaxMessageBytes));
  const auto n = static_cast<std::uint32_t>(payload.size());
  std::string out;
  out.reserve(4 + payload.size());
  for (int shift : {24, 16, 8, 0})
    out.push_back(static_cast<char>((n >> shift) & 0xff));
  out.append(payload);
  return out;
}

void MessageReader::push(std::span<const char> bytes) {
  buffer_.insert(buffer_.end(), bytes.begin(), bytes.end());
}

std::optional<std::string> MessageReader::next() {
  if (oversized_ || buffer_.size() < 4)
    return std::nullopt;
  std::uint32_t n = 0;
  for (int k = 0; k < 4; ++k)
    n = (n << 8) | static_cast<std::uint8_t>(buffer_[k]);
  if (n > kMaxMessageBytes) {
    oversized_ = true;
    return std::nullopt;
  }
  if (buffer_.size() < 4 + n)
    return std::nullopt;
  std::string out(buffer_.begin() + 4, buffer_.begin() + 4 + n);
  buffer_.erase(buffer_.begin(), buffer_.begin() + 4 + n);
  return out;
}

const std::vector<std::string> &command_names() {
  static const std::vector<std::string> names{
      "load_step",    "relay_force", "generator_trip",  "sensor_bias",    "trip",
      "reset_trip",   "sync_request", "setpoint_change", "relay_command", "breaker_command"};
  return names;
}

namespace {

bool is_operator_command(const std::string &c) {
  return c == "trip" || c == "reset_trip" || c == "sync_request" || c == "setpoint_change" ||
         c == "relay_command" || c == "breaker_command";
}

ParseResult fail(std::string id, std::string reason) { return {std::nullopt, std::move(id), std::move(reason)}; }

} // namespace

ParseResult parse_client_message(std::string_view text) {
  json doc = json::parse(text, nullptr, false);
  if (doc.is_discarded())
    return fail("", "malformed JSON");
  if (!doc.is_object())
    return fail("", "message must be a JSON object");
  std::string id;
  if (doc.contains("request_id")) {
    if (!doc["request_id"].is_string() || doc["request_id"].get<std::string>().empty())
      return fail("", "request_id must be a non-empty string");
    id = doc["request_id"].get<std::string>();
  }
  if (!doc.contains("kind") || !doc["kind"].is_string())
    return fail(id, "message needs a kind");
  const auto kind = doc["kind"].get<std::string>();

  ClientMessage m;
  m.request_id = id;
  if (kind == "hello") {
    m.kind = ClientKind::hello;
    if (!doc.contains("proto_version") || !doc["proto_version"].is_number_integer())
      return fail(id, "hello needs an integer proto_version");
    m.proto_version = doc["proto_version"].get<int>();
    if (doc.contains("token")) {
      if (!doc["token"].is_string())
        return fail(id, "token must be a string");
      m.token = doc["token"].get<std::string>();
    }
    return {std::move(m), id, {}};
  }
  if (kind != "subscribe" && kind != "command" && kind != "whatif")
    return fail(id, fmt::format("unknown message kind '{}'", kind));
  if (id.empty())
    return fail(id, fmt::format("{} needs a request_id", kind));

  if (kind == "subscribe") {
    m.kind = ClientKind::subscribe;
    if (doc.contains("decimation")) {
      if (!doc["decimation"].is_number_integer() || doc["decimation"].get<int>() < 1)
        return fail(id, "decimation must be a positive integer");
      m.decimation = doc["decimation"].get<int>();
    }
    return {std::move(m), id, {}};
  }

  m.kind = kind == "command" ? ClientKind::command : ClientKind::whatif;
  if (!doc.contains("command") || !doc["command"].is_string())
    return fail(id, fmt::format("{} needs a command name", kind));
  m.command = doc["command"].get<std::string>();
  const auto &names = command_names();
  if (std::find(names.begin(), names.end(), m.command) == names.end())
    return fail(id, fmt::format("unknown command '{}'", m.command));
  json params = doc.value("params", json::object());
  if (!params.is_object())
    return fail(id, "params must be an object");
  if (is_operator_command(m.command)) {
    params["command"] = m.command;
    params["request_id"] = id;
    m.event.kind = engine::EventKind::operator_command;
  } else {
    m.event.kind = *engine::event_kind_from_string(m.command);
  }
  m.event.params = std::move(params);
  return {std::move(m), id, {}};
}

} // namespace gridloop::service
