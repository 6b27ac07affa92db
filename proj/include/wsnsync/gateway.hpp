#pragma once

#include <string_view>

#include "wsnsync/protocol.hpp"

namespace wsnsync {

/// How an intermediate node forwards reports toward the head.
enum class GatewayMode {
  PacketRelay,    ///< payload untouched
  TimeTranslate,  ///< timestamps rewritten into the gateway's own frame
};

std::string_view to_string(GatewayMode mode);
GatewayMode gateway_mode_from_string(std::string_view name);

struct ForwardResult {
  Report report;
  bool flagged = false;  ///< translation requested without a ledger entry
};

/// Forwards a report one hop up. In TimeTranslate mode every bundled
/// timestamp becomes `local_time - offset` using the gateway's ledger for
/// the downstream node; with no ledger entry the report passes unchanged and
/// the result is flagged.
ForwardResult gateway_forward(GatewayMode mode, Report report, const SensorLedger& downstream);

}  // namespace wsnsync
