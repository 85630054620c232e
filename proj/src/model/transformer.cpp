#include "genrank/model/transformer.hpp"

namespace genrank::lm {

template class CausalLm<float>;
template class CausalLm<double>;

}  // namespace genrank::lm
