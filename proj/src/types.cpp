#include "brainform/types.hpp"

namespace brainform {

std::string_view to_string(StimContext c) {
  switch (c) {
    case StimContext::Calibration: return "calibration";
    case StimContext::TaskA: return "task_a";
    case StimContext::TaskB: return "task_b";
    case StimContext::Tutorial: return "tutorial";
  }
  return "unknown";
}

StimContext stim_context_from_code(int code) {
  switch (code) {
    case 1: return StimContext::Calibration;
    case 2: return StimContext::TaskA;
    case 3: return StimContext::TaskB;
    case 4: return StimContext::Tutorial;
    default: throw ParseError("unknown stimulus context code " + std::to_string(code));
  }
}

}  // namespace brainform
