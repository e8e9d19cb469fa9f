#pragma once

namespace ptp {

// Selects the OpenMP kernel or its serial twin. Both produce bit-identical results.
enum class Exec { parallel, serial };

} // namespace ptp
