/* Binary search tree of ints: insert, search, delete and a few queries. */
#include <stdlib.h>

struct node {
    int data;
    struct node *left;
    struct node *right;
};

struct node *new_node(int data)
{
    struct node *n = (struct node *)malloc(sizeof(struct node));
    n->data = data;
    n->left = NULL;
    n->right = NULL;
    return n;
}

struct node *insert(struct node *root, int data)
{
    if (root==NULL)
        return new_node(data);
    if (data < root->data)
        root->left = insert(root->left, data);
    else if (data > root->data)
        root->right = insert(root->right, data);
    return root;
}

int search(struct node *root, int data)
{
    if (root == NULL)
        return 0;
    if (data == root->data)
        return 1;
    if (data < root->data)
        return search(root->left, data);
    return search(root->right, data);
}

struct node *find_min(struct node *root)
{
    while (root->left != NULL)
        root = root->left;
    return root;
}

int tree_size(struct node *root)
{
    if (root == NULL)
        return 0;
    return 1 + tree_size(root->left) + tree_size(root->right);
}

static int count_leaves(struct node *root)
{
    if (root == NULL)
        return 0;
    if (root->left == NULL && root->right == NULL)
        return 1;
    return count_leaves(root->left) + count_leaves(root->right);
}

struct node *delete_node(struct node *root, int data)
{
    if (root == NULL)
        return NULL;
    if (data < root->data) {
        root->left = delete_node(root->left, data);
    } else if (data > root->data) {
        root->right = delete_node(root->right, data);
    } else if (root->left == NULL) {
        struct node *right = root->right;
        free(root);
        return right;
    } else if (root->right == NULL) {
        struct node *left = root->left;
        free(root);
        return left;
    } else {
        struct node *min = find_min(root->right);
        root->data = min->data;
        root->right = delete_node(root->right, min->data);
    }
    return root;
}

void free_tree(struct node *root)
{
    if (root == NULL)
        return;
    free_tree(root->left);
    free_tree(root->right);
    free(root);
}
