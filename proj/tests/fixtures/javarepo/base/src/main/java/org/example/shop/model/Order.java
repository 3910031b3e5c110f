package org.example.shop.model;

import java.util.ArrayList;
import java.util.List;

public class Order extends BaseEntity {
    private final Customer customer;
    private final List<Item> items = new ArrayList<>();
    private boolean processed;

    public Order(Customer customer) {
        this.customer = customer;
    }

    public Customer getCustomer() {
        return customer;
    }

    public List<Item> getItems() {
        return items;
    }

    public void addItem(Item item) {
        items.add(item);
    }

    public boolean isProcessed() {
        return processed;
    }

    public void markProcessed() {
        processed = true;
    }
}
