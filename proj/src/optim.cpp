#include "canopy/optim.hpp"

#include <stdexcept>

namespace canopy {

OptimizerKind parse_optimizer(std::string_view name) {
  if (name == "sgd") return OptimizerKind::sgd;
  if (name == "adam") return OptimizerKind::adam;
  if (name == "adamax") return OptimizerKind::adamax;
  if (name == "nadam") return OptimizerKind::nadam;
  if (name == "adagrad") return OptimizerKind::adagrad;
  if (name == "rmsprop") return OptimizerKind::rmsprop;
  if (name == "adadelta") return OptimizerKind::adadelta;
  throw std::invalid_argument("unknown optimizer '" + std::string(name) +
                              "' (expected one of: sgd, adam, adamax, nadam, adagrad, rmsprop, "
                              "adadelta)");
}

std::string optimizer_name(OptimizerKind kind) {
  switch (kind) {
    case OptimizerKind::sgd: return "sgd";
    case OptimizerKind::adam: return "adam";
    case OptimizerKind::adamax: return "adamax";
    case OptimizerKind::nadam: return "nadam";
    case OptimizerKind::adagrad: return "adagrad";
    case OptimizerKind::rmsprop: return "rmsprop";
    case OptimizerKind::adadelta: return "adadelta";
  }
  return "?";
}

OptimizerHyper default_hyper(OptimizerKind kind) {
  OptimizerHyper h;
  switch (kind) {
    case OptimizerKind::sgd: h.learning_rate = 0.01; break;
    case OptimizerKind::adam: h.learning_rate = 0.002; break;
    case OptimizerKind::nadam: h.learning_rate = 0.002; break;
    case OptimizerKind::adamax: h.learning_rate = 0.002; break;
    case OptimizerKind::adagrad: h.learning_rate = 0.05; break;
    case OptimizerKind::rmsprop: h.learning_rate = 0.001; h.rho = 0.9; break;
    case OptimizerKind::adadelta: h.learning_rate = 1.0; h.rho = 0.95; break;
  }
  return h;
}

}  // namespace canopy
