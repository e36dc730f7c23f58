#include "uwsn/kernels.hpp"

namespace uwsn::kernels {

namespace {

const Ops& pick() {
#if defined(__x86_64__) || defined(_M_X64)
    __builtin_cpu_init();
    if (__builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma")) {
        if (const Ops* v = avx2_ops()) return *v;
    }
#endif
    return scalar_ops();
}

} // namespace

const Ops& ops() {
    static const Ops& selected = pick();
    return selected;
}

} // namespace uwsn::kernels
