/* Doubly linked list of ints: push at both ends, find, remove, free. */
#include <stdio.h>
#include <stdlib.h>

struct dll_node {
    int value;
    struct dll_node *prev;
    struct dll_node *next;
};

struct dll_node *dll_push_front(struct dll_node *head, int value)
{
    struct dll_node *node = (struct dll_node *)malloc(sizeof(struct dll_node));
    node->value = value;
    node->prev = NULL;
    node->next = head;
    if (head != NULL)
        head->prev = node;
    return node;
}

struct dll_node *dll_push_back(struct dll_node *head, int value)
{
    struct dll_node *node = (struct dll_node *)malloc(sizeof(struct dll_node));
    struct dll_node *tail = head;
    node->value = value;
    node->next = NULL;
    if (head == NULL) {
        node->prev = NULL;
        return node;
    }
    while (tail->next != NULL)
        tail = tail->next;
    tail->next = node;
    node->prev = tail;
    return head;
}

int dll_length(const struct dll_node *head)
{
    int count = 0;
    while (head != NULL) {
        count = count + 1;
        head = head->next;
    }
    return count;
}

struct dll_node *dll_find(struct dll_node *head, int value)
{
    while (head != NULL) {
        if (head->value == value)
            return head;
        head = head->next;
    }
    return NULL;
}

struct dll_node *dll_remove(struct dll_node *head, int value)
{
    struct dll_node *cur = dll_find(head, value);
    if (cur == NULL)
        return head;
    if (cur->prev != NULL)
        cur->prev->next = cur->next;
    else
        head = cur->next;
    if (cur->next != NULL)
        cur->next->prev = cur->prev;
    free(cur);
    return head;
}

void dll_free(struct dll_node *head)
{
    while (head != NULL) {
        struct dll_node *next = head->next;
        free(head);
        head = next;
    }
}

void dll_print_banner(void)
{
    printf("doubly linked list:\n");
}
