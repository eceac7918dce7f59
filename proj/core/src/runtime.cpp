#include "arvae/runtime.hpp"

#include <Eigen/Core>

namespace arvae {

void set_max_threads(int n) { Eigen::setNbThreads(n < 1 ? 1 : n); }

int max_threads() { return Eigen::nbThreads(); }

}  // namespace arvae
