/* Saturating addition, kept tiny on purpose: three paths, no heap. */
#include <stdlib.h>

int clamp_add(int a, int b)
{
    int sum = a + b;
    if (sum > 100)
        return 100;
    if (sum < 0)
        return 0;
    return sum;
}
