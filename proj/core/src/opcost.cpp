#include "sparsedit/opcost.hpp"

namespace sparsedit::opcost {

namespace {
thread_local Recorder* g_active = nullptr;
}

Recorder::Recorder() : prev_(g_active) {
    g_active = this;
}

Recorder::~Recorder() {
    g_active = prev_;
}

void charge(std::int64_t flops) {
    if (g_active != nullptr) g_active->total_ += flops;
}

}  // namespace sparsedit::opcost
