/* Stack of ints on a growable heap buffer. */
#include <stdio.h>
#include <stdlib.h>

struct dynamic_stack {
    int *items;
    int capacity;
    int top;
};

struct dynamic_stack *stack_create(int capacity)
{
    struct dynamic_stack *s = (struct dynamic_stack *)malloc(sizeof(struct dynamic_stack));
    if (capacity < 1)
        capacity = 1;
    s->items = (int *)malloc(sizeof(int) * (size_t)capacity);
    s->capacity = capacity;
    s->top = 0;
    return s;
}

int stack_is_empty(const struct dynamic_stack *s)
{
    if (s->top == 0)
        return 1;
    return 0;
}

int stack_push(struct dynamic_stack *s, int value)
{
    if (s->top == s->capacity) {
        s->capacity = s->capacity * 2;
        s->items = (int *)realloc(s->items, sizeof(int) * (size_t)s->capacity);
    }
    s->items[s->top] = value;
    s->top = s->top + 1;
    return s->top;
}

int stack_pop(struct dynamic_stack *s, int *out)
{
    if (s->top == 0)
        return 0;
    s->top = s->top - 1;
    *out = s->items[s->top];
    return 1;
}

int stack_peek(const struct dynamic_stack *s, int *out)
{
    if (s->top == 0)
        return 0;
    *out = s->items[s->top - 1];
    return 1;
}

void stack_destroy(struct dynamic_stack *s)
{
    if (s == NULL)
        return;
    free(s->items);
    free(s);
}

int main(void)
{
    struct dynamic_stack *s = stack_create(2);
    int value = 0;
    stack_push(s, 4);
    stack_push(s, 8);
    stack_push(s, 15);
    stack_pop(s, &value);
    printf("%d\n", value);
    stack_destroy(s);
    return 0;
}
