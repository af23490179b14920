/* offbyone: record-stream summarizer with an off-by-one bound check.
 *
 * Input: "RC" magic, then two-byte records [tag][arg].  Tag 'T' looks up
 * a description row for arg; tag 'P' pads the total.  The row table has
 * MAX_ROWS entries plus one defensively allocated spare slot, and the
 * admission check lets arg == MAX_ROWS through, so a count of exactly 4
 * dereferences the empty spare slot inside the guarded branch.
 */

#include <stdio.h>
#include <stdlib.h>
#include <string.h>

#include "rcab_trace.h"

#define MAX_ROWS 4

static const char *row_text[MAX_ROWS] = {"alpha", "beta", "gamma", "delta"};

static long describe(long count)
{
    long total = -1;
    char **rows = calloc(MAX_ROWS + 1, sizeof(char *)); /* spare slot stays NULL */
    if (!rows)
        TRACE_EXIT(70);
    for (long i = 0; i < MAX_ROWS; i++) { TRACE_BLOCK(10);
        rows[i] = (char *)row_text[i];
    }
    if (count <= MAX_ROWS) { TRACE_BLOCK(11); TRACE_VAL(11, count); /* BUG: should be < MAX_ROWS */
        total = (long)strlen(rows[count]);
    } else { TRACE_BLOCK(12);
        total = -1;
    }
    free(rows);
    return total;
}

int main(int argc, char **argv)
{
    static unsigned char buf[1 << 16];
    long n;
    long total = 0;
    FILE *f;

    rcab_trace_init();
    TRACE_BLOCK(1);
    if (argc < 2)
        TRACE_EXIT(64);
    f = fopen(argv[1], "rb");
    if (!f) { TRACE_BLOCK(2);
        TRACE_EXIT(66);
    }
    n = (long)fread(buf, 1, sizeof(buf), f);
    fclose(f);
    if (n < 2 || buf[0] != 'R' || buf[1] != 'C') { TRACE_BLOCK(3);
        TRACE_EXIT(65);
    }
    TRACE_BLOCK(4);
    for (long off = 2; off + 1 < n; off += 2) { TRACE_BLOCK(5);
        unsigned char tag = buf[off];
        unsigned char arg = buf[off + 1];
        if (tag == 'T') { TRACE_BLOCK(6); TRACE_VAL(6, arg);
            long r = describe(arg);
            if (r >= 0) { TRACE_BLOCK(7);
                total += r;
            }
        } else if (tag == 'P') { TRACE_BLOCK(8); TRACE_VAL(8, arg);
            total += arg;
        } else { TRACE_BLOCK(9);
            TRACE_EXIT(65);
        }
    }
    TRACE_VAL(1, total);
    TRACE_EXIT(0);
}
