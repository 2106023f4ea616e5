#include "mlop/errors.hpp"

#include <sstream>

namespace mlop {

namespace {

std::string located(const std::string& what, std::size_t row, std::size_t column) {
  std::ostringstream out;
  out << what;
  if (row > 0) {
    out << " (row " << row;
    if (column > 0) out << ", column " << column;
    out << ")";
  }
  return out.str();
}

}  // namespace

ParseError::ParseError(const std::string& what, std::size_t row, std::size_t column)
    : IoError(located(what, row, column)), row_(row), column_(column) {}

DegenerateSketchError::DegenerateSketchError(std::size_t requested, std::size_t achieved_rank)
    : NumericalError("degenerate sketch: requested dimension " + std::to_string(requested) +
                     " but P^T G has rank " + std::to_string(achieved_rank)),
      requested_(requested),
      achieved_rank_(achieved_rank) {}

CoincidentPointsError::CoincidentPointsError(double distance)
    : NumericalError("coincident reconstruction points (distance " + std::to_string(distance) + ")"),
      distance_(distance) {}

}  // namespace mlop
