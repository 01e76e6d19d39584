// preprocess.hpp — Ramp removal via relative time-series blocks.
#pragma once

#include <vector>

#include "hamscope/timeseries.hpp"
#include "hamscope/types.hpp"

namespace hamscope {

enum class RampSide {
    Initial,  // right-divide by the anchor, cancels the state preparation map
    Final,    // left-divide by the anchor, cancels the measurement map
};

struct PreprocessConfig {
    long stride = 1;            // anchor spacing in samples
    long window = 50;           // relative offsets kept per anchor: [-window, window]
    double pinv_cutoff = 1e-6;  // relative singular value cutoff for the anchor inverse
    RampSide side = RampSide::Initial;
    double cond_limit = 1e6;    // anchors with a larger condition number are skipped

    void validate() const;
};

// One anchor's relative samples Y_d, stored for consecutive offsets
// d = first_offset .. first_offset + samples.size() - 1.
struct RelativeBlock {
    long anchor_index = 0;
    long first_offset = 0;
    std::vector<ComplexMatrix> samples;
};

struct RelativeTimeSeries {
    std::vector<RelativeBlock> blocks;
    double dt_ns = 0.0;
    long window = 0;
    int dim = 0;
};

// Divides every snapshot near an anchor by the anchor snapshot
// (pseudo-inverse), so each block approximates a pure propagator in the
// frame set by the surviving ramp map. Ill-conditioned anchors are skipped;
// throws IdentificationError if no anchor survives.
RelativeTimeSeries remove_ramp(const TimeSeriesData& series, const PreprocessConfig& cfg);

// Moore-Penrose pseudo-inverse with a relative singular value cutoff.
ComplexMatrix pseudo_inverse(const ComplexMatrix& a, double cutoff);

}  // namespace hamscope
