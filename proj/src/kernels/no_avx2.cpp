#include "ofo/kernels.hpp"

namespace ofo::kernels::detail {

const Table* avx2_table() { return nullptr; }

}  // namespace ofo::kernels::detail
