#pragma once

#include <cstdint>

namespace sparsedit::opcost {

// Per-element FLOP charges for non-matmul kernels. Matmul (M,K)x(K,N) is
// charged 2*M*K*N (the 2*MAC convention); these constants cover the rest.
inline constexpr std::int64_t kElementwise = 1;   // add/sub/mul/scale per output element
inline constexpr std::int64_t kLayerNorm = 5;     // per normalized element
inline constexpr std::int64_t kSoftmax = 5;       // per attention-map element
inline constexpr std::int64_t kActivation = 5;    // gelu/silu/sin/cos per element

// Thread-local counter of FLOPs actually executed by the tensor kernels.
// Used by tests as the op-graph-walking oracle for the analytic counter.
class Recorder {
public:
    Recorder();
    ~Recorder();
    Recorder(const Recorder&) = delete;
    Recorder& operator=(const Recorder&) = delete;

    std::int64_t total() const { return total_; }
    void reset() { total_ = 0; }

private:
    friend void charge(std::int64_t);
    std::int64_t total_ = 0;
    Recorder* prev_ = nullptr;
};

// Adds to the innermost active recorder, if any. No-op otherwise.
void charge(std::int64_t flops);

}  // namespace sparsedit::opcost
