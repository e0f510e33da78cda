#include "snsim/fft.hpp"

#include <fftw3.h>
#ifdef __GLIBC__
#include <malloc.h>
#endif

#include <map>
#include <mutex>
#include <tuple>
#include <vector>

namespace snsim::fft {
namespace {

#ifdef __GLIBC__
// Field buffers run 128 KiB - 8 MiB; keep them on the heap instead of
// round-tripping through mmap on every allocation.
struct MallocTuner {
    MallocTuner() {
        mallopt(M_MMAP_THRESHOLD, 32 << 20);
        mallopt(M_TRIM_THRESHOLD, 64 << 20);
    }
};
const MallocTuner malloc_tuner;
#endif

// Plans are created once with FFTW_UNALIGNED so fftw_execute_dft may run on
// arbitrary caller arrays. Creation is serialized; execution is not.
class PlanCache {
public:
    static PlanCache& instance() {
        static PlanCache cache;
        return cache;
    }

    fftw_plan get(int dim, int n, int sign) {
        const auto key = std::make_tuple(dim, n, sign);
        std::lock_guard lock(mutex_);
        auto it = plans_.find(key);
        if (it != plans_.end()) return it->second;

        std::size_t total = 1;
        std::vector<int> dims(dim, n);
        for (int i = 0; i < dim; ++i) total *= static_cast<std::size_t>(n);
        std::vector<fftw_complex> in(total), out(total);
        fftw_plan plan =
            fftw_plan_dft(dim, dims.data(), in.data(), out.data(), sign,
                          FFTW_ESTIMATE | FFTW_UNALIGNED);
        plans_.emplace(key, plan);
        return plan;
    }

private:
    std::mutex mutex_;
    std::map<std::tuple<int, int, int>, fftw_plan> plans_;
};

}  // namespace

void transform(const GridSpec& grid, const std::complex<double>* in,
               std::complex<double>* out, int sign) {
    fftw_plan plan =
        PlanCache::instance().get(grid.dimension, grid.points_per_axis, sign);
    fftw_execute_dft(
        plan,
        reinterpret_cast<fftw_complex*>(const_cast<std::complex<double>*>(in)),
        reinterpret_cast<fftw_complex*>(out));
}

}  // namespace snsim::fft
