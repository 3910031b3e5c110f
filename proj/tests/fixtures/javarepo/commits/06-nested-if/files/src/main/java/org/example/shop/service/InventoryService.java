package org.example.shop.service;

import java.util.List;

import org.example.shop.model.Item;

public class InventoryService {
    private final int threshold;
    private int restocked;

    public InventoryService(int threshold) {
        this.threshold = threshold;
    }

    public int restock(List<Item> items, int amount) {
        int changed = 0;
        for (Item item : items) {
            if (item.getQuantity() < threshold) {
                item.setQuantity(item.getQuantity() + amount);
                item.setQuantity(Math.min(item.getQuantity(), 1000));
                changed++;
            }
        }
        restocked += changed;
        return changed;
    }

    public int totalRestocked() {
        return restocked;
    }
}
