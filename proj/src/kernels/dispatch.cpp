#include <cstdlib>
#include <string>

#include "puzzlemeasure/error.hpp"
#include "puzzlemeasure/kernels/kernels.hpp"

namespace puzzlemeasure::kernels {

std::string_view to_string(Isa isa) { return isa == Isa::kAvx2 ? "avx2" : "scalar"; }

const Table& active() {
  static const Table& chosen = [] () -> const Table& {
    const char* env = std::getenv("PUZZLEMEASURE_SIMD");
    const std::string want = env ? env : "";
    if (want == "scalar") return scalar_table();
    if (!want.empty() && want != "avx2") {
      throw Error(ErrorKind::kConfig, "PUZZLEMEASURE_SIMD must be scalar or avx2, got " + want);
    }
    if (const Table* t = avx2_table()) return *t;
    return scalar_table();
  }();
  return chosen;
}

}  // namespace puzzlemeasure::kernels
