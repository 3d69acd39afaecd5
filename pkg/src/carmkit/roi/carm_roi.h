/* Region-of-interest markers for application profiling.
 *
 * Wrap the code span to analyze:
 *
 *     #include "carm_roi.h"
 *     ...
 *     carm_roi_start();
 *     kernel_under_study();
 *     carm_roi_end();
 *
 * Behavior selects at compile time:
 *   default             - wall-clock timing only; elapsed seconds printed
 *                         as an `elapsed_seconds:` line for the report
 *                         parsers.
 *   -DCARM_ROI_SDE      - additionally emits the instrumentation engine's
 *                         start/stop marker instruction sequences so
 *                         opcode counting is limited to the region.
 *   -DCARM_ROI_PMU      - additionally starts/stops a hardware-counter
 *                         region; the event is chosen per pass via the
 *                         CARM_PMU_EVENT environment variable by the
 *                         integration layer.
 */

#ifndef CARM_ROI_H
#define CARM_ROI_H

#include <stdio.h>
#include <time.h>

static struct timespec carm_roi_ts_start_;

#if defined(CARM_ROI_SDE) && (defined(__x86_64__) || defined(_M_X64))
/* Marker sequences recognized by the instrumentation engine: magic values
 * in a scratch register around an xchg that is otherwise a no-op. */
#define CARM_ROI_MARK_(v)                                   \
    __asm__ __volatile__("mov $" #v ", %%ebx\n\t"           \
                         ".byte 0x64, 0x67, 0x90\n\t"       \
                         : : : "ebx")
#define CARM_ROI_MARK_START() CARM_ROI_MARK_(1)
#define CARM_ROI_MARK_END()   CARM_ROI_MARK_(2)
#else
#define CARM_ROI_MARK_START() ((void)0)
#define CARM_ROI_MARK_END()   ((void)0)
#endif

#ifdef CARM_ROI_PMU
/* Provided by the counter integration layer linked into the binary. */
void carm_pmu_region_start(void);
void carm_pmu_region_end(void);
#else
#define carm_pmu_region_start() ((void)0)
#define carm_pmu_region_end()   ((void)0)
#endif

static inline void carm_roi_start(void)
{
    CARM_ROI_MARK_START();
    carm_pmu_region_start();
    clock_gettime(CLOCK_MONOTONIC, &carm_roi_ts_start_);
}

static inline void carm_roi_end(void)
{
    struct timespec end;
    double elapsed;

    clock_gettime(CLOCK_MONOTONIC, &end);
    carm_pmu_region_end();
    CARM_ROI_MARK_END();
    elapsed = (double)(end.tv_sec - carm_roi_ts_start_.tv_sec)
        + (double)(end.tv_nsec - carm_roi_ts_start_.tv_nsec) * 1e-9;
    fprintf(stderr, "elapsed_seconds: %.9f\n", elapsed);
}

#endif /* CARM_ROI_H */
