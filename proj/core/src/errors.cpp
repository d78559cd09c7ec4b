#include "jumplab/errors.hpp"

// Out-of-line anchor so the exception hierarchy has one home translation unit.
namespace jumplab {}
