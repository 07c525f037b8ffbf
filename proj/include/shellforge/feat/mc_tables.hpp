#pragma once

namespace shellforge::mc {

// Bit i of the edge-table entry marks an iso crossing on cube edge i; the
// triangle table lists edge-vertex triples terminated by -1.
extern const int kEdgeTable[256];
extern const int kTriTable[256][16];

}  // namespace shellforge::mc
