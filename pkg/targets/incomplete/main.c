/* incomplete: range check that misses one boundary.
 *
 * A 16-bit step index is rejected when strictly greater than the limit,
 * so index == STEP_LIMIT slips into the lookup and lands on the empty
 * spare slot of the step table.
 */

#include <stdio.h>
#include <stdlib.h>
#include <string.h>

#include "rcab_trace.h"

#define STEP_LIMIT 8

static const char *step_names[STEP_LIMIT] = {
    "init", "parse", "layout", "render", "merge", "emit", "verify", "done",
};

int main(int argc, char **argv)
{
    static unsigned char buf[1 << 16];
    long n;
    long idx;
    long len;
    const char **table;
    FILE *f;

    rcab_trace_init();
    TRACE_BLOCK(1);
    if (argc < 2)
        TRACE_EXIT(64);
    f = fopen(argv[1], "rb");
    if (!f)
        TRACE_EXIT(66);
    n = (long)fread(buf, 1, sizeof(buf), f);
    fclose(f);
    if (n < 2) { TRACE_BLOCK(2);
        TRACE_EXIT(65);
    }
    idx = (long)buf[0] | ((long)buf[1] << 8);
    TRACE_BLOCK(3); TRACE_VAL(3, idx);
    if (idx > STEP_LIMIT) { TRACE_BLOCK(4); /* BUG: misses idx == STEP_LIMIT */
        TRACE_EXIT(65);
    }
    table = calloc(STEP_LIMIT + 1, sizeof(*table)); /* spare slot stays NULL */
    if (!table)
        TRACE_EXIT(70);
    for (long i = 0; i < STEP_LIMIT; i++) { TRACE_BLOCK(5);
        table[i] = step_names[i];
    }
    TRACE_BLOCK(6); TRACE_VAL(6, idx);
    len = (long)strlen(table[idx]); /* idx == STEP_LIMIT reads the NULL slot */
    TRACE_BLOCK(7); TRACE_VAL(7, len);
    free(table);
    TRACE_EXIT(0);
}
