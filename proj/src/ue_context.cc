#include "xrsched/ue_context.h"

#include <algorithm>

namespace xrsched {

std::int64_t UeContext::buffered_bits() const {
  if (!is_xr()) return kFullBufferBits;
  std::int64_t total = 0;
  for (const auto& set : pdu_set_queue) total += set.pending_bits();
  return total;
}

const PduSet* UeContext::hol_set() const {
  for (const auto& set : pdu_set_queue) {
    if (set.pending_bits() > 0) return &set;
  }
  return nullptr;
}

PduSet* UeContext::hol_set() {
  return const_cast<PduSet*>(static_cast<const UeContext*>(this)->hol_set());
}

bool UeContext::has_pending_retx() const {
  return std::any_of(harq.begin(), harq.end(), [](const HarqProcess& p) {
    return p.feedback_received && p.tb.failed_cbgs() > 0;
  });
}

bool embb_has_data(const UeContext& ue) {
  if (ue.is_xr()) throw ContractError("embb_has_data called for an XR UE");
  return true;
}

}  // namespace xrsched
