#include "gwfract/parallel.hpp"

#include <cmath>
#include <cstdlib>
#include <string>

namespace gwf {

namespace {
int g_threads = 0;
}

void set_thread_count(int n) { g_threads = n > 0 ? n : 0; }

int thread_count() {
    if (g_threads > 0) return g_threads;
#ifdef _OPENMP
    return omp_get_num_procs();
#else
    return 1;
#endif
}

void init_threads_from_env() {
    if (g_threads > 0) return;
    if (const char* env = std::getenv("GWFRACT_THREADS")) {
        try {
            set_thread_count(std::stoi(env));
        } catch (...) {
        }
    }
}

double Proportion::std_error() const {
    if (trials == 0) return 0.0;
    double p = value();
    return std::sqrt(p * (1.0 - p) / static_cast<double>(trials));
}

}  // namespace gwf
