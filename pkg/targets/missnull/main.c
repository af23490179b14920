/* missnull: null-pointer dereference from a missing check.
 *
 * The label finder returns NULL for unknown keys, and the caller walks
 * the label without checking.  Two fixes are equally valid: test the
 * pointer right after the lookup, or guard the walk itself; both lines
 * are registered as ground truth.
 */

#include <stdio.h>
#include <stdlib.h>

#include "rcab_trace.h"

#define N_LABELS 5

static const char *labels[N_LABELS] = {"zero", "one", "two", "three", "four"};

static const char *find_label(long key)
{
    TRACE_BLOCK(3); TRACE_VAL(3, key);
    if (key < N_LABELS) { TRACE_BLOCK(4);
        return labels[key];
    }
    TRACE_BLOCK(5);
    return NULL; /* unknown keys have no label */
}

int main(int argc, char **argv)
{
    static unsigned char buf[1 << 16];
    long n;
    long total = 0;
    FILE *f;
    const char *label;

    rcab_trace_init();
    TRACE_BLOCK(1);
    if (argc < 2)
        TRACE_EXIT(64);
    f = fopen(argv[1], "rb");
    if (!f)
        TRACE_EXIT(66);
    n = (long)fread(buf, 1, sizeof(buf), f);
    fclose(f);
    if (n < 1) { TRACE_BLOCK(2);
        TRACE_EXIT(65);
    }
    label = find_label(buf[0]); TRACE_BLOCK(6); /* fix candidate: check label == NULL here */
    for (long i = 0; label[i]; i++) { TRACE_BLOCK(7); /* fix candidate: or guard this walk */
        total += label[i];
    }
    TRACE_BLOCK(8); TRACE_VAL(8, total);
    TRACE_EXIT(0);
}
