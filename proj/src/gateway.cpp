#include "wsnsync/gateway.hpp"

#include <string>

#include "wsnsync/errors.hpp"

namespace wsnsync {

std::string_view to_string(GatewayMode mode) {
  return mode == GatewayMode::PacketRelay ? "relay" : "translate";
}

GatewayMode gateway_mode_from_string(std::string_view name) {
  if (name == "relay") return GatewayMode::PacketRelay;
  if (name == "translate") return GatewayMode::TimeTranslate;
  throw ConfigError("mode", "unknown gateway mode '" + std::string(name) + "'");
}

ForwardResult gateway_forward(GatewayMode mode, Report report, const SensorLedger& downstream) {
  if (mode == GatewayMode::PacketRelay) return {std::move(report), false};
  if (!downstream.valid()) return {std::move(report), true};
  for (auto& rec : report.bundle) rec.local_time -= downstream.last_offset_estimate;
  return {std::move(report), false};
}

}  // namespace wsnsync
